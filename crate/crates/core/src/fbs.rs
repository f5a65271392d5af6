//! Fractional Brownian sheet sampling and its empirical verification.
//!
//! The sheet Xi is the centered Gaussian field on the null plane with
//! covariance `R_H1(|a1|, |a2|) R_H2(|b1|, |b2|)`, where
//!
//! ```text
//! R_H(a, b) = (a^{2H} + b^{2H} - |a - b|^{2H}) / 2.
//! ```
//!
//! Since the covariance reads |alpha|, the field is almost surely even in
//! each variable and vanishes on the axes; we therefore sample only the
//! nonnegative quadrant lattice {dx, 2 dx, ..., L} per axis and extend by
//! reflection, which is exact in law and halves each covariance matrix.
//! On the quadrant the covariance is the tensor product of the two per-axis
//! matrices, so a sample is `L1 Z L2^T` with per-axis Cholesky factors and an
//! i.i.d. standard normal matrix Z (Kronecker sampler), instead of one dense
//! factorization of the full lattice covariance.
//!
//! The mixed derivative Xi_{alpha beta} is a distribution; what the Young
//! sums in [`crate::wave`] consume are cell increments, so the derivative
//! field stores the mixed second difference quotient per cell and the two
//! views agree by construction.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::grid::{Arity, Field2, Frame, Grid2};
use crate::lp::mixed_norm;
use crate::num::Real;

/// Hurst index pair of the sheet. Plain configuration scalars; the sampling
/// itself is generic over the working precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HurstPair {
    pub h1: f64,
    pub h2: f64,
}

impl HurstPair {
    pub fn new(h1: f64, h2: f64) -> Result<Self> {
        for (name, h) in [("h1", h1), ("h2", h2)] {
            if !(0.0 < h && h < 1.0) {
                return Err(Error::Config(format!(
                    "Hurst index {name} = {h} outside (0, 1)"
                )));
            }
        }
        Ok(Self { h1, h2 })
    }

    /// Validates the pair after deserialization.
    pub fn validate(self) -> Result<Self> {
        Self::new(self.h1, self.h2)
    }

    pub fn min(self) -> f64 {
        self.h1.min(self.h2)
    }
}

/// One sheet realization with its cell-increment derivative field.
#[derive(Debug, Clone)]
pub struct FbsSample<T> {
    grid: Grid2<T>,
    sheet: Field2<T>,
    derivative: Field2<T>,
    seed: u64,
    hurst: HurstPair,
}

impl<T: Real> FbsSample<T> {
    /// Wraps externally supplied sheet values (deterministic surrogates,
    /// subsampled finer sheets) with the derivative field recomputed from the
    /// given values. `hurst` is kept as metadata for regime checks.
    pub fn from_sheet(sheet: Field2<T>, hurst: HurstPair, seed: u64) -> Self {
        assert_eq!(sheet.frame(), Frame::Null, "sheets live in the null frame");
        assert_eq!(sheet.arity(), Arity::Scalar, "sheets are scalar");
        let grid = sheet.grid();
        let n = grid.n();
        let dx2 = grid.spacing() * grid.spacing();
        let mut derivative = Field2::zeros(grid, Frame::Null, Arity::Scalar);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let inc = sheet.at(0, i + 1, j + 1) - sheet.at(0, i + 1, j) - sheet.at(0, i, j + 1)
                    + sheet.at(0, i, j);
                *derivative.at_mut(0, i, j) = inc.unscale(dx2);
            }
        }
        Self {
            grid,
            sheet,
            derivative,
            seed,
            hurst,
        }
    }

    pub fn grid(&self) -> Grid2<T> {
        self.grid
    }

    /// Sheet values Xi on the full null-frame grid.
    pub fn sheet(&self) -> &Field2<T> {
        &self.sheet
    }

    /// Mixed second difference quotients (cell increment / dx^2); the last
    /// row and column, which own no cell, are zero.
    pub fn derivative(&self) -> &Field2<T> {
        &self.derivative
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hurst(&self) -> HurstPair {
        self.hurst
    }

    /// Double increment of the sheet over the rectangle spanned by the two
    /// node index pairs.
    pub fn rect_increment(&self, (i1, j1): (usize, usize), (i2, j2): (usize, usize)) -> T {
        let s = |i, j| self.sheet.at(0, i, j).re;
        s(i2, j2) - s(i2, j1) - s(i1, j2) + s(i1, j1)
    }
}

/// The fractional Brownian covariance `R_H(a, b)` for a, b >= 0.
pub fn covariance_r<T: Real>(h: T, a: T, b: T) -> T {
    let two_h = T::of(2.0) * h;
    (a.powf(two_h) + b.powf(two_h) - (a - b).abs().powf(two_h)) / T::of(2.0)
}

/// Lower Cholesky factor of a symmetric positive definite matrix (row-major).
/// On a nonpositive pivot one round of diagonal jitter `1e-12 trace / m` is
/// applied; a second failure is reported.
fn cholesky<T: Real>(mut c: Vec<T>, m: usize, what: &'static str, h: f64) -> Result<Vec<T>> {
    let mut jittered = false;
    loop {
        match try_cholesky(&c, m) {
            Some(l) => return Ok(l),
            None if !jittered => {
                jittered = true;
                let trace = (0..m).fold(T::zero(), |a, i| a + c[i * m + i]);
                let jitter = T::of(1e-12) * trace / T::of(m as f64);
                for i in 0..m {
                    c[i * m + i] += jitter;
                }
            }
            None => {
                return Err(Error::Cholesky {
                    axis: what,
                    hurst: h,
                    detail: format!("nonpositive pivot persists after jitter (size {m})"),
                })
            }
        }
    }
}

fn try_cholesky<T: Real>(c: &[T], m: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); m * m];
    for j in 0..m {
        let mut d = c[j * m + j];
        for k in 0..j {
            d -= l[j * m + k] * l[j * m + k];
        }
        if d <= T::zero() {
            return None;
        }
        let dj = d.sqrt();
        l[j * m + j] = dj;
        for i in (j + 1)..m {
            let mut v = c[i * m + j];
            for k in 0..j {
                v -= l[i * m + k] * l[j * m + k];
            }
            l[i * m + j] = v / dj;
        }
    }
    Some(l)
}

/// Per-axis covariance matrix on the quadrant points {dx, ..., L} and its
/// Cholesky factor.
fn axis_factor<T: Real>(grid: Grid2<T>, h: f64, what: &'static str) -> Result<Vec<T>> {
    let m = grid.n() / 2;
    let dx = grid.spacing();
    let th = T::of(h);
    let mut c = vec![T::zero(); m * m];
    for i in 0..m {
        let a = dx * T::of((i + 1) as f64);
        for j in 0..m {
            c[i * m + j] = covariance_r(th, a, dx * T::of((j + 1) as f64));
        }
    }
    cholesky(c, m, what, h)
}

/// Draws one sheet. Deterministic in (grid, hurst, seed).
pub fn sample_sheet<T: Real>(grid: Grid2<T>, hurst: HurstPair, seed: u64) -> Result<FbsSample<T>> {
    let l1 = axis_factor(grid, hurst.h1, "alpha")?;
    let l2 = axis_factor(grid, hurst.h2, "beta")?;
    Ok(sheet_from_factors(grid, hurst, seed, &l1, &l2))
}

fn sheet_from_factors<T: Real>(
    grid: Grid2<T>,
    hurst: HurstPair,
    seed: u64,
    l1: &[T],
    l2: &[T],
) -> FbsSample<T> {
    let n = grid.n();
    let m = n / 2;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut z = vec![T::zero(); m * m];
    for v in z.iter_mut() {
        let g: f64 = StandardNormal.sample(&mut rng);
        *v = T::of(g);
    }
    // Q = L1 Z L2^T, both factors lower triangular.
    let mut zl = vec![T::zero(); m * m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = T::zero();
            for k in 0..=j {
                acc += z[i * m + k] * l2[j * m + k];
            }
            zl[i * m + j] = acc;
        }
    }
    let mut q = vec![T::zero(); m * m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = T::zero();
            for k in 0..=i {
                acc += l1[i * m + k] * zl[k * m + j];
            }
            q[i * m + j] = acc;
        }
    }

    let mut sheet = Field2::zeros(grid, Frame::Null, Arity::Scalar);
    for i in 0..n {
        let qi = i.abs_diff(n / 2);
        if qi == 0 {
            continue;
        }
        for j in 0..n {
            let qj = j.abs_diff(n / 2);
            if qj == 0 {
                continue;
            }
            sheet.at_mut(0, i, j).re = q[(qi - 1) * m + (qj - 1)];
        }
    }

    let dx2 = grid.spacing() * grid.spacing();
    let mut derivative = Field2::zeros(grid, Frame::Null, Arity::Scalar);
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let inc = sheet.at(0, i + 1, j + 1).re - sheet.at(0, i + 1, j).re
                - sheet.at(0, i, j + 1).re
                + sheet.at(0, i, j).re;
            derivative.at_mut(0, i, j).re = inc / dx2;
        }
    }

    FbsSample {
        grid,
        sheet,
        derivative,
        seed,
        hurst,
    }
}

/// Draws an ensemble with per-replicate seeds split from `base_seed`; the
/// axis factorizations are shared.
pub fn sample_ensemble<T: Real>(
    grid: Grid2<T>,
    hurst: HurstPair,
    base_seed: u64,
    count: usize,
) -> Result<Vec<FbsSample<T>>> {
    let l1 = axis_factor(grid, hurst.h1, "alpha")?;
    let l2 = axis_factor(grid, hurst.h2, "beta")?;
    Ok((0..count)
        .map(|r| {
            sheet_from_factors(
                grid,
                hurst,
                crate::num::split_seed(base_seed, r as u64),
                &l1,
                &l2,
            )
        })
        .collect())
}

/// Empirical variance of the double increment over the coordinate rectangle
/// [a1, a2] x [b1, b2] (nonnegative quadrant, corners on grid nodes).
pub fn rect_increment_variance<T: Real>(
    ensemble: &[FbsSample<T>],
    a: (f64, f64),
    b: (f64, f64),
) -> Result<T> {
    if ensemble.len() < 100 {
        return Err(Error::EnsembleTooSmall {
            got: ensemble.len(),
            min: 100,
        });
    }
    let grid = ensemble[0].grid();
    for (name, lo, hi) in [("alpha", a.0, a.1), ("beta", b.0, b.1)] {
        if lo < 0.0 || hi < lo {
            return Err(Error::Config(format!(
                "rectangle {name} range [{lo}, {hi}] not in the nonneg quadrant"
            )));
        }
    }
    let tol = grid.spacing() * T::of(1e-9);
    let i1 = grid.index_of(T::of(a.0), tol)?;
    let i2 = grid.index_of(T::of(a.1), tol)?;
    let j1 = grid.index_of(T::of(b.0), tol)?;
    let j2 = grid.index_of(T::of(b.1), tol)?;
    let mut sum_sq = T::zero();
    for s in ensemble {
        let inc = s.rect_increment((i1, j1), (i2, j2));
        sum_sq += inc * inc;
    }
    Ok(sum_sq / T::of(ensemble.len() as f64))
}

/// Mixed norm of the window-localized sheet, `|| eta (x) eta . Xi ||` with
/// exponents (h1p, h2p). Finite limits under refinement are expected only
/// for exponents below min(H1, H2); above, the value grows with N, which the
/// divergence tests exploit.
pub fn regularity_check<T: Real>(sample: &FbsSample<T>, h1p: T, h2p: T, cut: &CutoffPair<T>) -> T {
    assert_eq!(cut.grid(), sample.grid(), "cutoff grid mismatch");
    let windowed = sample.sheet().windowed(&cut.window2(Frame::Null));
    mixed_norm(&windowed, h1p, h2p)
}

/// Dense-Cholesky reference for the Kronecker sampler: reconstructs both
/// quadrant covariances (Kronecker product of per-axis factors vs one dense
/// factorization of the full lattice covariance) and returns the maximum
/// absolute entry difference. Algebraic identity, no Monte Carlo.
pub fn kron_vs_dense_covariance_gap<T: Real>(grid: Grid2<T>, hurst: HurstPair) -> Result<T> {
    let n = grid.n();
    let m = n / 2;
    let l1 = axis_factor(grid, hurst.h1, "alpha")?;
    let l2 = axis_factor(grid, hurst.h2, "beta")?;
    let gram = |l: &[T]| {
        let mut g = vec![T::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                let mut acc = T::zero();
                for k in 0..=i.min(j) {
                    acc += l[i * m + k] * l[j * m + k];
                }
                g[i * m + j] = acc;
            }
        }
        g
    };
    let c1 = gram(&l1);
    let c2 = gram(&l2);

    // Dense covariance of the flattened quadrant lattice, row-major pairs
    // (i, j) -> i * m + j.
    let mm = m * m;
    let dx = grid.spacing();
    let mut dense = vec![T::zero(); mm * mm];
    for i1 in 0..m {
        for j1 in 0..m {
            for i2 in 0..m {
                for j2 in 0..m {
                    let r1 = covariance_r(
                        T::of(hurst.h1),
                        dx * T::of((i1 + 1) as f64),
                        dx * T::of((i2 + 1) as f64),
                    );
                    let r2 = covariance_r(
                        T::of(hurst.h2),
                        dx * T::of((j1 + 1) as f64),
                        dx * T::of((j2 + 1) as f64),
                    );
                    dense[(i1 * m + j1) * mm + (i2 * m + j2)] = r1 * r2;
                }
            }
        }
    }
    let lf = cholesky(dense.clone(), mm, "dense", hurst.h1)?;
    let mut gap = T::zero();
    for r in 0..mm {
        for c in 0..mm {
            let mut acc = T::zero();
            for k in 0..=r.min(c) {
                acc += lf[r * mm + k] * lf[c * mm + k];
            }
            let kron = c1[(r / m) * m + (c / m)] * c2[(r % m) * m + (c % m)];
            let d = (acc - kron).abs();
            if d > gap {
                gap = d;
            }
        }
    }
    Ok(gap)
}
