//! Dyadic Littlewood-Paley partition and the anisotropic norm families.
//!
//! The partition on one frequency axis is built from the smooth step of
//! [`crate::cutoff`]: phi_0 = psi_step, and for j >= 1
//!
//! ```text
//! phi_j(x) = psi_step(2^{-j} x) - psi_step(2^{-j+1} x),
//! ```
//!
//! so supp phi_0 = [-2, 2], supp phi_j = {2^{j-1} <= |x| <= 2^{j+1}}, the sum
//! telescopes to psi_step(2^{-J} x) = 1 for |x| <= 2^J, and the scaled
//! derivative 2^j phi_j' is bounded by one constant for all j. J_max is the
//! largest shell meeting the discrete axis; by its choice the partition sums
//! to exactly 1 on every grid frequency.
//!
//! Norms (angle bracket `<x> = sqrt(1 + x^2)`, spectra normalized as in
//! [`crate::spectral`], so every family reduces to the discrete L^2 norm at
//! zero smoothness):
//!
//! - product: `(2L)^{-2} Sum <tau>^{2s} <xi>^{2 delta} |F|^2` (and the
//!   axis-swapped variant);
//! - mixed: root of the sum of squares of the two product variants;
//! - hyperbolic: weight `<|tau| + |xi|>^{2s} <|tau| - |xi|>^{2 delta}`;
//! - Besov (2,2 summation): `Sum_{j,k} 2^{2(s1 j + s2 k)} ||block_{j,k} f||^2`,
//!   computed spectrally via Parseval.
//!
//! Vector fields take the root-sum-of-squares over components everywhere.

use crate::cutoff::psi_step;
use crate::error::{Error, Result};
use crate::grid::{Field2, Grid2, Spectrum2};
use crate::num::Real;
use crate::spectral::{dft2, idft2};

/// Sampled dyadic partition of unity on the frequency axis of a grid.
#[derive(Debug, Clone)]
pub struct DyadicPartition<T> {
    grid: Grid2<T>,
    j_max: usize,
    /// phi[j][k]: shell j evaluated at FFT bin k.
    phi: Vec<Vec<T>>,
}

impl<T: Real> DyadicPartition<T> {
    /// Builds the partition for `grid`'s frequency axis.
    ///
    /// Fails when fewer than three shells (j_max < 2) meet the axis: the
    /// frequency-split inverse needs genuinely separated low/high blocks.
    pub fn new(grid: Grid2<T>) -> Result<Self> {
        let max_freq = grid.max_freq().as_f64();
        let mut j_max = 0usize;
        while 2f64.powi(j_max as i32) <= max_freq {
            j_max += 1;
        }
        // Largest j with 2^{j-1} <= max_freq.
        if j_max < 2 {
            return Err(Error::Grid(format!(
                "dyadic partition needs j_max >= 2, got {j_max} \
                 (max grid frequency {max_freq:.3})"
            )));
        }
        let n = grid.n();
        let phi = (0..=j_max)
            .map(|j| {
                (0..n)
                    .map(|k| Self::phi_value(j, grid.freq(k)))
                    .collect()
            })
            .collect();
        Ok(Self { grid, j_max, phi })
    }

    /// Closed-form shell value phi_j(x).
    pub fn phi_value(j: usize, x: T) -> T {
        if j == 0 {
            psi_step(x)
        } else {
            let scale = T::of(2f64.powi(-(j as i32)));
            psi_step(x * scale) - psi_step(x * scale * T::of(2.0))
        }
    }

    pub fn grid(&self) -> Grid2<T> {
        self.grid
    }

    /// Index of the last shell meeting the axis.
    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// Shell j sampled at FFT bin k.
    pub fn phi(&self, j: usize, k: usize) -> T {
        self.phi[j][k]
    }

    /// Shell samples for one j.
    pub fn shell(&self, j: usize) -> &[T] {
        &self.phi[j]
    }

    /// Sum of all shells at bin k (should be exactly 1).
    pub fn partition_sum(&self, k: usize) -> T {
        self.phi.iter().fold(T::zero(), |a, row| a + row[k])
    }
}

/// Frequency-localized block `block_{j,k} f` (shell j along alpha, k along
/// beta). Negative indices denote the zero block by convention.
pub fn lp_block<T: Real>(f: &Field2<T>, part: &DyadicPartition<T>, j: i32, k: i32) -> Field2<T> {
    assert_eq!(f.grid(), part.grid(), "partition grid mismatch");
    if j < 0 || k < 0 {
        return Field2::zeros(f.grid(), f.frame(), f.arity());
    }
    let (j, k) = (j as usize, k as usize);
    assert!(j <= part.j_max() && k <= part.j_max(), "shell out of range");
    let n = f.grid().n();
    let mut s = dft2(f);
    for c in 0..s.num_comps() {
        let comp = s.comp_mut(c);
        for k0 in 0..n {
            let w0 = part.phi(j, k0);
            for k1 in 0..n {
                comp[k0 * n + k1] *= w0 * part.phi(k, k1);
            }
        }
    }
    idft2(&s)
}

/// Which product-norm axis carries the exponent `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisOrder {
    /// H^s in alpha tensor H^delta in beta.
    AlphaBeta,
    /// H^s in beta tensor H^delta in alpha.
    BetaAlpha,
}

/// Norm family selector used by the CLI and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormFamily {
    ProductAlphaBeta,
    ProductBetaAlpha,
    Mixed,
    Hyperbolic,
    Besov,
}

impl NormFamily {
    pub fn label(self) -> &'static str {
        match self {
            NormFamily::ProductAlphaBeta => "product_ab",
            NormFamily::ProductBetaAlpha => "product_ba",
            NormFamily::Mixed => "mixed",
            NormFamily::Hyperbolic => "hyperbolic",
            NormFamily::Besov => "besov",
        }
    }
}

fn bracket<T: Real>(x: T) -> T {
    (T::one() + x * x).sqrt()
}

fn weighted_sq<T: Real>(s: &Spectrum2<T>, mut weight: impl FnMut(T, T) -> T) -> T {
    let grid = s.grid();
    let n = grid.n();
    let mut acc = T::zero();
    for k0 in 0..n {
        let tau = grid.freq(k0);
        for k1 in 0..n {
            let w = weight(tau, grid.freq(k1));
            for c in 0..s.num_comps() {
                acc += s.at(c, k0, k1).norm_sqr() * w;
            }
        }
    }
    let two_l = T::of(2.0) * grid.half_width();
    acc / (two_l * two_l)
}

/// Product Sobolev norm on a precomputed spectrum.
pub fn product_norm_of<T: Real>(s: &Spectrum2<T>, sexp: T, dexp: T, order: AxisOrder) -> T {
    weighted_sq(s, |tau, xi| match order {
        AxisOrder::AlphaBeta => {
            bracket(tau).powf(T::of(2.0) * sexp) * bracket(xi).powf(T::of(2.0) * dexp)
        }
        AxisOrder::BetaAlpha => {
            bracket(tau).powf(T::of(2.0) * dexp) * bracket(xi).powf(T::of(2.0) * sexp)
        }
    })
    .sqrt()
}

/// Product Sobolev norm `H^s (x) H^delta` with `s` on the axis selected by
/// `order`.
pub fn product_norm<T: Real>(f: &Field2<T>, sexp: T, dexp: T, order: AxisOrder) -> T {
    product_norm_of(&dft2(f), sexp, dexp, order)
}

/// Mixed norm on a precomputed spectrum: root-sum-of-squares of the two
/// product variants.
pub fn mixed_norm_of<T: Real>(s: &Spectrum2<T>, sexp: T, dexp: T) -> T {
    let a = product_norm_of(s, sexp, dexp, AxisOrder::AlphaBeta);
    let b = product_norm_of(s, sexp, dexp, AxisOrder::BetaAlpha);
    (a * a + b * b).sqrt()
}

/// Mixed norm of a field (the solution space norm; fields are expected in the
/// null frame, which is asserted in debug builds).
pub fn mixed_norm<T: Real>(f: &Field2<T>, sexp: T, dexp: T) -> T {
    debug_assert_eq!(
        f.frame(),
        crate::grid::Frame::Null,
        "mixed norm is a null-frame norm"
    );
    mixed_norm_of(&dft2(f), sexp, dexp)
}

/// Hyperbolic norm on a precomputed spectrum.
pub fn hyperbolic_norm_of<T: Real>(s: &Spectrum2<T>, sexp: T, dexp: T) -> T {
    weighted_sq(s, |tau, xi| {
        bracket(tau.abs() + xi.abs()).powf(T::of(2.0) * sexp)
            * bracket(tau.abs() - xi.abs()).powf(T::of(2.0) * dexp)
    })
    .sqrt()
}

/// Hyperbolically weighted norm of a Cartesian-frame field.
pub fn hyperbolic_norm<T: Real>(f: &Field2<T>, sexp: T, dexp: T) -> T {
    debug_assert_eq!(
        f.frame(),
        crate::grid::Frame::Cartesian,
        "hyperbolic norm is a Cartesian-frame norm"
    );
    hyperbolic_norm_of(&dft2(f), sexp, dexp)
}

/// Anisotropic Besov norm with (2,2) summation over dyadic blocks; block L^2
/// masses are evaluated spectrally (Parseval), which is exactly the block
/// field's discrete L^2 norm.
pub fn besov_norm<T: Real>(f: &Field2<T>, part: &DyadicPartition<T>, s1: T, s2: T) -> T {
    assert_eq!(f.grid(), part.grid(), "partition grid mismatch");
    besov_norm_of(&dft2(f), part, s1, s2)
}

/// Besov norm on a precomputed spectrum.
pub fn besov_norm_of<T: Real>(
    s: &Spectrum2<T>,
    part: &DyadicPartition<T>,
    s1: T,
    s2: T,
) -> T {
    let grid = s.grid();
    let n = grid.n();
    let jm = part.j_max();
    let mut acc = T::zero();
    for j in 0..=jm {
        let wj = T::of(2f64).powf(T::of(2.0) * s1 * T::of(j as f64));
        for k in 0..=jm {
            let wk = T::of(2f64).powf(T::of(2.0) * s2 * T::of(k as f64));
            let mut block = T::zero();
            for k0 in 0..n {
                let p0 = part.phi(j, k0);
                if p0 == T::zero() {
                    continue;
                }
                for k1 in 0..n {
                    let p = p0 * part.phi(k, k1);
                    if p == T::zero() {
                        continue;
                    }
                    for c in 0..s.num_comps() {
                        block += s.at(c, k0, k1).norm_sqr() * p * p;
                    }
                }
            }
            acc += wj * wk * block;
        }
    }
    let two_l = T::of(2.0) * grid.half_width();
    acc.sqrt() / two_l
}

/// Dispatcher over the norm families (used by the verification CLI).
pub fn norm_by_family<T: Real>(
    f: &Field2<T>,
    part: &DyadicPartition<T>,
    family: NormFamily,
    sexp: T,
    dexp: T,
) -> T {
    match family {
        NormFamily::ProductAlphaBeta => product_norm(f, sexp, dexp, AxisOrder::AlphaBeta),
        NormFamily::ProductBetaAlpha => product_norm(f, sexp, dexp, AxisOrder::BetaAlpha),
        NormFamily::Mixed => mixed_norm_of(&dft2(f), sexp, dexp),
        NormFamily::Hyperbolic => hyperbolic_norm_of(&dft2(f), sexp, dexp),
        NormFamily::Besov => besov_norm(f, part, sexp, dexp),
    }
}

/// Sum of squared block L^2 norms over all shells; bounded between
/// ||f||^2 / 4 and ||f||^2 by the adjacent-shell overlap.
pub fn block_energy<T: Real>(f: &Field2<T>, part: &DyadicPartition<T>) -> T {
    besov_norm(f, part, T::zero(), T::zero()).powi(2)
}
