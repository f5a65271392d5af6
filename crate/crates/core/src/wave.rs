//! Constituents of the mild form in null coordinates: the homogeneous wave
//! evolved from initial data, the inverse of the reduced wave operator
//! `diamond = 4 d^2/(d alpha d beta)` built two independent ways, and the
//! Young-type stochastic convolution against sheet increments.
//!
//! Both inverse routes produce the particular solution that vanishes to first
//! order on the anti-diagonal `beta = -alpha`, so they agree up to
//! discretization error and either can cross-check the other.  The quadrature
//! route runs nested cumulative trapezoid passes directly on the density; the
//! frequency-split route integrates only the doubly-low block that way and
//! trades the remaining blocks for spectral divisions plus one-dimensional
//! corrections along the anti-diagonal.
//!
//! Integration ranges are signed throughout: every range is evaluated as a
//! difference of one antiderivative array, so orientation reversals need no
//! case split.  Antiderivatives carry n + 1 entries per axis, the last one
//! closing the period at +L; lower limits of the form -x then land on the
//! closed index n - i exactly, including the wrap cases.

use num_complex::Complex;
use serde::Serialize;

use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::fbs::FbsSample;
use crate::geometry::{sigma_apply, DiffusionCoeff};
use crate::grid::{Arity, Field2, Frame, Grid2};
use crate::lp::{mixed_norm, DyadicPartition};
use crate::num::Real;
use crate::spectral::{dft2, idft2};

/// Position and velocity profiles on the alpha axis, both chart-valued.
///
/// The profiles are 2L-periodic grid functions; `s_label` records the Sobolev
/// regularity attributed to the position, the velocity carrying one order
/// less.
#[derive(Debug, Clone)]
pub struct InitialData<T> {
    grid: Grid2<T>,
    u0: [Vec<T>; 2],
    u1: [Vec<T>; 2],
    s_label: f64,
}

impl<T: Real> InitialData<T> {
    pub fn new(grid: Grid2<T>, u0: [Vec<T>; 2], u1: [Vec<T>; 2], s_label: f64) -> Result<Self> {
        let n = grid.n();
        for row in u0.iter().chain(u1.iter()) {
            if row.len() != n {
                return Err(Error::Grid(format!(
                    "initial data length {} does not match the {n}-point axis",
                    row.len()
                )));
            }
        }
        Ok(Self {
            grid,
            u0,
            u1,
            s_label,
        })
    }

    pub fn from_fn(
        grid: Grid2<T>,
        s_label: f64,
        mut f0: impl FnMut(T) -> (T, T),
        mut f1: impl FnMut(T) -> (T, T),
    ) -> Self {
        let n = grid.n();
        let mut u0 = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut u1 = [Vec::with_capacity(n), Vec::with_capacity(n)];
        for i in 0..n {
            let x = grid.coord(i);
            let (a, b) = f0(x);
            u0[0].push(a);
            u0[1].push(b);
            let (a, b) = f1(x);
            u1[0].push(a);
            u1[1].push(b);
        }
        Self {
            grid,
            u0,
            u1,
            s_label,
        }
    }

    pub fn zero(grid: Grid2<T>, s_label: f64) -> Self {
        let z = vec![T::zero(); grid.n()];
        Self {
            grid,
            u0: [z.clone(), z.clone()],
            u1: [z.clone(), z],
            s_label,
        }
    }

    pub fn grid(&self) -> Grid2<T> {
        self.grid
    }

    pub fn u0(&self, comp: usize) -> &[T] {
        &self.u0[comp]
    }

    pub fn u1(&self, comp: usize) -> &[T] {
        &self.u1[comp]
    }

    pub fn s_label(&self) -> f64 {
        self.s_label
    }

    /// Regularity label of the velocity profile.
    pub fn u1_label(&self) -> f64 {
        self.s_label - 1.0
    }
}

/// d'Alembert evolution of the data: the average of the position profile at
/// alpha and -beta plus half the velocity mass between those points.  Exact
/// pointwise in the position part, trapezoid-exact in the velocity part; the
/// trace on `beta = -alpha` reproduces the position profile bit for bit.
pub fn homogeneous_solution<T: Real>(data: &InitialData<T>) -> Field2<T> {
    let grid = data.grid;
    let n = grid.n();
    let dx = grid.spacing();
    let half = T::of(0.5);
    let mut out = Field2::zeros(grid, Frame::Null, Arity::Vector2);
    for c in 0..2 {
        let u0 = &data.u0[c];
        let cum = cumtrap_real(&data.u1[c], data.u1[c][0], dx);
        let out_c = out.comp_mut(c);
        for p in 0..n {
            for q in 0..n {
                let neg_q = (n - q) % n;
                let val = half * (u0[p] + u0[neg_q]) + half * (cum[p] - cum[n - q]);
                out_c[p * n + q].re = val;
            }
        }
    }
    out
}

fn cumtrap_real<T: Real>(vals: &[T], closing: T, dx: T) -> Vec<T> {
    let n = vals.len();
    let half = T::of(0.5);
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = T::zero();
    for k in 0..n {
        out.push(acc);
        let next = if k + 1 < n { vals[k + 1] } else { closing };
        acc += half * dx * (vals[k] + next);
    }
    out.push(acc);
    out
}

fn cumtrap<T: Real>(vals: &[Complex<T>], closing: Complex<T>, dx: T) -> Vec<Complex<T>> {
    let n = vals.len();
    let half = T::of(0.5);
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = Complex::new(T::zero(), T::zero());
    for k in 0..n {
        out.push(acc);
        let next = if k + 1 < n { vals[k + 1] } else { closing };
        acc += (vals[k] + next).scale(half * dx);
    }
    out.push(acc);
    out
}

/// Unscaled nested integral `int_{-beta}^{alpha} int_{-a}^{beta} f db da`
/// by two cumulative trapezoid passes.  Row antiderivatives close the period
/// with the periodic value at +L; the outer pass closes with the inner
/// integral evaluated at a = +L, whose own lower limit -a wraps to -L.
fn double_integral_raw<T: Real>(f: &Field2<T>) -> Field2<T> {
    let grid = f.grid();
    let n = grid.n();
    let dx = grid.spacing();
    let half = T::of(0.5);
    let czero = Complex::new(T::zero(), T::zero());
    let mut out = Field2::zeros(grid, f.frame(), f.arity());
    for c in 0..f.num_comps() {
        let vals = f.comp(c).to_vec();
        let mut b = vec![czero; n * (n + 1)];
        for i in 0..n {
            let row = &vals[i * n..(i + 1) * n];
            let mut acc = czero;
            for j in 0..n {
                b[i * (n + 1) + j] = acc;
                let next = if j + 1 < n { row[j + 1] } else { row[0] };
                acc += (row[j] + next).scale(half * dx);
            }
            b[i * (n + 1) + n] = acc;
        }
        let out_c = out.comp_mut(c);
        let mut w = vec![czero; n + 1];
        let mut a = vec![czero; n + 1];
        for q in 0..n {
            for i in 0..n {
                w[i] = b[i * (n + 1) + q] - b[i * (n + 1) + (n - i)];
            }
            w[n] = b[q];
            let mut acc = czero;
            for k in 0..n {
                a[k] = acc;
                acc += (w[k] + w[k + 1]).scale(half * dx);
            }
            a[n] = acc;
            let lower = a[n - q];
            for p in 0..n {
                out_c[p * n + q] = a[p] - lower;
            }
        }
    }
    out
}

/// Inverse wave operator by direct nested quadrature; for a density f this is
/// the particular solution F with `diamond F = f` and `F = dF = 0` on the
/// anti-diagonal, up to O(dx^2).
pub fn dalembert_inverse_quadrature<T: Real>(f: &Field2<T>) -> Field2<T> {
    assert_eq!(f.frame(), Frame::Null, "the inverse acts in null coordinates");
    double_integral_raw(f).scale(T::of(0.25))
}

/// Inverse wave operator through the frequency split.  The doubly-low block
/// goes through the same nested quadrature as the direct route; blocks that
/// are high in one axis are inverted spectrally in that axis and corrected by
/// one-dimensional integrals of their anti-diagonal traces; the doubly-high
/// block needs no quadrature at all, only trace corrections.  The partition
/// argument certifies that the dyadic shells resolve the grid, which is what
/// collapses the high-shell sums to `1 - phi_0`.
pub fn dalembert_inverse_lp<T: Real>(f: &Field2<T>, part: &DyadicPartition<T>) -> Field2<T> {
    assert_eq!(f.grid(), part.grid(), "partition grid mismatch");
    assert_eq!(f.frame(), Frame::Null, "the inverse acts in null coordinates");
    let grid = f.grid();
    let n = grid.n();
    let dx = grid.spacing();
    let zero = T::zero();
    let one = T::one();
    let half = T::of(0.5);
    let czero = Complex::new(zero, zero);
    let low = |x: T| DyadicPartition::phi_value(0, x);

    let s = dft2(f);
    // Division by i*tau or i*xi only ever happens under a weight containing
    // the matching 1 - phi_0 factor, which vanishes identically for
    // frequencies of magnitude <= 1.
    let low_block = idft2(&s.multiplied(|tau, xi| Complex::new(low(tau) * low(xi), zero)));
    let v = idft2(&s.multiplied(|tau, xi| {
        let w = low(tau) * (one - low(xi));
        if w == zero {
            czero
        } else {
            debug_assert!(xi.abs() > half, "high weight at a low frequency");
            Complex::new(zero, -(w / xi))
        }
    }));
    let u = idft2(&s.multiplied(|tau, xi| {
        let w = (one - low(tau)) * low(xi);
        if w == zero {
            czero
        } else {
            debug_assert!(tau.abs() > half, "high weight at a low frequency");
            Complex::new(zero, -(w / tau))
        }
    }));
    let g0 = idft2(&s.multiplied(|tau, xi| {
        let w = (one - low(tau)) * (one - low(xi));
        if w == zero {
            czero
        } else {
            Complex::new(-(w / (tau * xi)), zero)
        }
    }));
    let gxi = idft2(&s.multiplied(|tau, xi| {
        let w = (one - low(tau)) * (one - low(xi));
        if w == zero {
            czero
        } else {
            Complex::new(zero, -(w / xi))
        }
    }));
    let gtau = idft2(&s.multiplied(|tau, xi| {
        let w = (one - low(tau)) * (one - low(xi));
        if w == zero {
            czero
        } else {
            Complex::new(zero, -(w / tau))
        }
    }));

    let mut out = double_integral_raw(&low_block);
    for c in 0..out.num_comps() {
        let vc = v.comp(c).to_vec();
        let uc = u.comp(c).to_vec();
        let g0c = g0.comp(c).to_vec();
        let gxic = gxi.comp(c).to_vec();
        let gtauc = gtau.comp(c).to_vec();
        let out_c = out.comp_mut(c);

        // Piece with xi high, tau low: alpha-antiderivative of V minus the
        // alpha-antiderivative of its anti-diagonal trace.
        let trace_v: Vec<Complex<T>> = (0..n).map(|i| vc[i * n + ((n - i) % n)]).collect();
        let w_cum = cumtrap(&trace_v, trace_v[0], dx);
        let mut col = vec![czero; n];
        for q in 0..n {
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = vc[i * n + q];
            }
            let c_cum = cumtrap(&col, col[0], dx);
            let lower = c_cum[n - q] - w_cum[n - q];
            for p in 0..n {
                out_c[p * n + q] = out_c[p * n + q] + (c_cum[p] - w_cum[p]) - lower;
            }
        }

        // Mirror piece with tau high, xi low, integrated in beta.
        let trace_u: Vec<Complex<T>> = (0..n).map(|j| uc[((n - j) % n) * n + j]).collect();
        let x_cum = cumtrap(&trace_u, trace_u[0], dx);
        for p in 0..n {
            let row = &uc[p * n..(p + 1) * n];
            let d_cum = cumtrap(row, row[0], dx);
            let lower = d_cum[n - p] - x_cum[n - p];
            for q in 0..n {
                out_c[p * n + q] = out_c[p * n + q] + (d_cum[q] - x_cum[q]) - lower;
            }
        }

        // Doubly-high piece: fully inverted in frequency, then brought to the
        // right boundary values by its own diagonal traces and the
        // antiderivative of the single-division traces.
        let trace_y: Vec<Complex<T>> = (0..n)
            .map(|i| {
                let j = (n - i) % n;
                gxic[i * n + j] + gtauc[i * n + j]
            })
            .collect();
        let y_cum = cumtrap(&trace_y, trace_y[0], dx);
        for p in 0..n {
            let neg_p = (n - p) % n;
            for q in 0..n {
                let neg_q = (n - q) % n;
                let corner = g0c[p * n + q];
                let diag = (g0c[p * n + neg_p] + g0c[neg_q * n + q]).scale(half);
                let trace = (y_cum[p] - y_cum[n - q]).scale(half);
                out_c[p * n + q] = out_c[p * n + q] + corner - diag - trace;
            }
        }
    }
    out.scale(T::of(0.25))
}

/// Young-type convolution: quarter of the signed sum of `sigma_u * increment`
/// over the cells of the integration triangle, the summand evaluated at each
/// cell's lower-left corner.  Increments are raw cell increments (density
/// times cell area when they come from a derivative field).
pub fn young_convolution<T: Real>(sigma_u: &Field2<T>, increments: &Field2<T>) -> Field2<T> {
    assert_eq!(sigma_u.grid(), increments.grid(), "grid mismatch");
    assert_eq!(sigma_u.frame(), Frame::Null, "convolution acts in null coordinates");
    assert_eq!(increments.num_comps(), 1, "increments must be scalar");
    let grid = sigma_u.grid();
    let n = grid.n();
    let quarter = T::of(0.25);
    let czero = Complex::new(T::zero(), T::zero());
    let inc = increments.comp(0).to_vec();
    let mut out = Field2::zeros(grid, Frame::Null, sigma_u.arity());
    for c in 0..sigma_u.num_comps() {
        let sc = sigma_u.comp(c);
        let mut p = vec![czero; n * (n + 1)];
        for i in 0..n {
            let mut acc = czero;
            for j in 0..n {
                p[i * (n + 1) + j] = acc;
                acc += sc[i * n + j] * inc[i * n + j];
            }
            p[i * (n + 1) + n] = acc;
        }
        let out_c = out.comp_mut(c);
        let mut t = vec![czero; n + 1];
        for q in 0..n {
            let mut acc = czero;
            for k in 0..n {
                t[k] = acc;
                acc = acc + p[k * (n + 1) + q] - p[k * (n + 1) + (n - k)];
            }
            t[n] = acc;
            let lower = t[n - q];
            for row in 0..n {
                out_c[row * n + q] = (t[row] - lower).scale(quarter);
            }
        }
    }
    out
}

/// Stochastic convolution of the diffusion coefficient along `u` against the
/// sheet's cell increments.  Requires both Hurst indices above 1/2; below
/// that the Young sums have no limit and the request is refused.
pub fn stochastic_convolution<T: Real>(
    u: &Field2<T>,
    sigma: &DiffusionCoeff,
    sample: &FbsSample<T>,
) -> Result<Field2<T>> {
    let h = sample.hurst();
    if h.h1 <= 0.5 || h.h2 <= 0.5 {
        return Err(Error::Regime(format!(
            "Young summation needs Hurst indices above 1/2 on both axes, got ({}, {})",
            h.h1, h.h2
        )));
    }
    assert_eq!(u.grid(), sample.grid(), "field and sheet grids differ");
    let dx = u.grid().spacing();
    let sig = sigma_apply(sigma, u);
    let incr = sample.derivative().scale(dx * dx);
    Ok(young_convolution(&sig, &incr))
}

/// Outcome of [`inverse_estimate_check`].
#[derive(Debug, Clone, Serialize)]
pub struct InverseEstimateReport {
    /// Largest windowed-output to input norm ratio seen over the ensemble.
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Members that produced a ratio.
    pub count: usize,
    /// Members skipped because the input norm vanished.
    pub skipped: usize,
}

/// Measures, over an ensemble of densities, the ratio of the windowed mixed
/// norm of the inverted field at regularity (s, delta) to the input's mixed
/// norm one order down in both axes.  The exponent box (3/4, 1) with
/// s >= delta is enforced; outside it the gain estimate has no content.
pub fn inverse_estimate_check<T: Real>(
    ensemble: &[Field2<T>],
    part: &DyadicPartition<T>,
    cut: &CutoffPair<T>,
    s: f64,
    delta: f64,
) -> Result<InverseEstimateReport> {
    if !(0.75 < delta && delta <= s && s < 1.0) {
        return Err(Error::Config(format!(
            "exponents (s, delta) = ({s}, {delta}) outside 3/4 < delta <= s < 1"
        )));
    }
    if ensemble.is_empty() {
        return Err(Error::Config("empty ensemble".into()));
    }
    let window = cut.window2(Frame::Null);
    let se = T::of(s);
    let de = T::of(delta);
    let mut max_ratio = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    let mut skipped = 0usize;
    for f in ensemble {
        let den = mixed_norm(f, se - T::one(), de - T::one()).as_f64();
        if den == 0.0 {
            skipped += 1;
            continue;
        }
        let inv = dalembert_inverse_lp(f, part);
        let num = mixed_norm(&inv.windowed(&window), se, de).as_f64();
        let ratio = num / den;
        if !ratio.is_finite() {
            return Err(Error::Degenerate(format!(
                "non-finite estimate ratio {num} / {den}"
            )));
        }
        max_ratio = max_ratio.max(ratio);
        sum += ratio;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Degenerate(
            "every ensemble member had vanishing input norm".into(),
        ));
    }
    Ok(InverseEstimateReport {
        max_ratio,
        mean_ratio: sum / count as f64,
        count,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbs::{sample_sheet, HurstPair};
    use crate::geometry::SigmaKind;
    use crate::spectral::{spectral_derivative, Axis};
    use crate::tol;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn grid(n: usize) -> Grid2<f64> {
        Grid2::new(16.0, n).unwrap()
    }

    fn sup_gap(a: &Field2<f64>, b: &Field2<f64>) -> f64 {
        a.sub(b).sup_norm()
    }

    #[test]
    fn initial_data_rejects_mismatched_lengths() {
        let g = grid(16);
        let short = vec![0.0; 8];
        let ok = vec![0.0; 16];
        let r = InitialData::new(g, [short, ok.clone()], [ok.clone(), ok], 0.8);
        assert!(matches!(r, Err(Error::Grid(_))));
    }

    #[test]
    fn constant_data_propagates_unchanged() {
        let g = grid(64);
        let d = InitialData::from_fn(g, 0.8, |_| (1.25, -0.5), |_| (0.0, 0.0));
        let s = homogeneous_solution(&d);
        let n = g.n();
        for p in 0..n {
            for q in 0..n {
                assert!((s.at(0, p, q).re - 1.25).abs() < 1e-14);
                assert!((s.at(1, p, q).re + 0.5).abs() < 1e-14);
                assert_eq!(s.at(0, p, q).im, 0.0);
            }
        }
    }

    #[test]
    fn unit_velocity_gives_the_mean_ramp() {
        let g = grid(64);
        let d = InitialData::from_fn(g, 0.8, |_| (0.0, 0.0), |_| (1.0, 0.0));
        let s = homogeneous_solution(&d);
        let n = g.n();
        for p in 0..n {
            for q in 0..n {
                let want = 0.5 * (g.coord(p) + g.coord(q));
                assert!((s.at(0, p, q).re - want).abs() < 1e-12);
                assert_eq!(s.at(1, p, q).re, 0.0);
            }
        }
    }

    #[test]
    fn square_position_data_splits_between_the_axes() {
        let g = grid(128);
        let d = InitialData::from_fn(g, 0.8, |x| (x * x, 0.0), |_| (0.0, 0.0));
        let s = homogeneous_solution(&d);
        let n = g.n();
        for p in 0..n {
            for q in 0..n {
                let a = g.coord(p);
                let b = g.coord(q);
                let want = 0.5 * (a * a + b * b);
                assert!((s.at(0, p, q).re - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_trace_reproduces_the_position_data() {
        let g = grid(128);
        let n = g.n();
        let d = InitialData::from_fn(
            g,
            0.8,
            |x| ((0.3 * x).sin(), (0.2 * x).cos()),
            |x| ((0.15 * x).cos(), 0.1 * (0.4 * x).sin()),
        );
        let s = homogeneous_solution(&d);
        for p in 1..n {
            let q = n - p;
            for c in 0..2 {
                assert_eq!(s.at(c, p, q).re, d.u0(c)[p], "trace must be exact");
            }
        }
    }

    #[test]
    fn diagonal_derivative_recovers_the_velocity_data() {
        let g = grid(256);
        let n = g.n();
        let dx = g.spacing();
        let d = InitialData::from_fn(
            g,
            0.8,
            |x| ((0.3 * x).sin(), 0.0),
            |x| ((g.freq(2) * x).cos(), 0.5 * (g.freq(1) * x).sin()),
        );
        let s = homogeneous_solution(&d);
        let mut worst = 0.0f64;
        for p in 2..n - 1 {
            let q = n - p;
            if q + 1 > n - 1 {
                continue;
            }
            for c in 0..2 {
                let fd = (s.at(c, p + 1, q + 1).re - s.at(c, p - 1, q - 1).re) / (2.0 * dx);
                worst = worst.max((fd - d.u1(c)[p]).abs());
            }
        }
        eprintln!("homogeneous diagonal derivative constant {:.3e}", worst / (dx * dx));
        assert!(
            worst <= tol::HOMOG_DERIV_C * dx * dx,
            "diagonal derivative gap {worst}"
        );
    }

    #[test]
    fn quadrature_of_zero_is_zero() {
        let g = grid(64);
        let f = Field2::zeros(g, Frame::Null, Arity::Scalar);
        assert_eq!(dalembert_inverse_quadrature(&f).sup_norm(), 0.0);
    }

    #[test]
    fn quadrature_of_unit_density_is_the_square_of_the_sum() {
        let g = grid(256);
        let n = g.n();
        let f = Field2::from_fn(g, Frame::Null, |_, _| 1.0);
        let inv = dalembert_inverse_quadrature(&f);
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                let s = g.coord(p) + g.coord(q);
                worst = worst.max((inv.at(0, p, q).re - s * s / 8.0).abs());
            }
        }
        assert!(worst < 1e-10, "unit density gap {worst}");
        for p in 1..n {
            assert_eq!(inv.at(0, p, n - p).norm(), 0.0, "diagonal must vanish");
        }
    }

    // Separable cosine density with frequencies on the grid; the nested
    // integral has the closed form used below.
    fn cosine_exact(p: f64, q: f64, alpha: f64, beta: f64) -> f64 {
        let anti =
            |x: f64| -0.5 * (((q + p) * x).cos() / (q + p) + ((q - p) * x).cos() / (q - p));
        let term1 = (q * beta).sin() * ((p * alpha).sin() + (p * beta).sin()) / p;
        0.25 * (term1 + anti(alpha) - anti(beta)) / q
    }

    fn cosine_gap(n: usize) -> f64 {
        let g = grid(n);
        let p = g.freq(2);
        let q = g.freq(1);
        let f = Field2::from_fn(g, Frame::Null, |a, b| (p * a).cos() * (q * b).cos());
        let inv = dalembert_inverse_quadrature(&f);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = cosine_exact(p, q, g.coord(i), g.coord(j));
                worst = worst.max((inv.at(0, i, j).re - want).abs());
            }
        }
        worst
    }

    #[test]
    fn quadrature_converges_at_second_order_on_a_cosine_density() {
        let e1 = cosine_gap(128);
        let e2 = cosine_gap(256);
        let e3 = cosine_gap(512);
        let o1 = (e1 / e2).log2();
        let o2 = (e2 / e3).log2();
        eprintln!("cosine gaps {e1:.3e} {e2:.3e} {e3:.3e} orders {o1:.3} {o2:.3}");
        assert!(o1 >= 1.9, "first refinement order {o1}");
        assert!(o2 >= 1.9, "second refinement order {o2}");
        assert!(e3 <= tol::QUAD_COSINE_SUP_N512, "gap at n = 512 is {e3}");
    }

    #[test]
    fn quadrature_differentiates_back_to_the_corner_average() {
        let g = grid(256);
        let n = g.n();
        let dx = g.spacing();
        let p = g.freq(3);
        let q = g.freq(2);
        let f = Field2::from_fn(g, Frame::Null, |a, b| (p * a).sin() * (q * b).cos() + 0.4);
        let inv = dalembert_inverse_quadrature(&f);
        let mut worst = 0.0f64;
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let mixed = inv.at(0, i + 1, j + 1).re - inv.at(0, i + 1, j).re
                    - inv.at(0, i, j + 1).re
                    + inv.at(0, i, j).re;
                let recovered = 4.0 * mixed / (dx * dx);
                let center = (p * (g.coord(i) + 0.5 * dx)).sin()
                    * (q * (g.coord(j) + 0.5 * dx)).cos()
                    + 0.4;
                worst = worst.max((recovered - center).abs());
            }
        }
        eprintln!("mixed-difference inversion constant {:.3e}", worst / (dx * dx));
        assert!(
            worst <= tol::QUAD_DIFF_BACK_C * dx * dx,
            "inversion residual {worst}"
        );
    }

    #[test]
    fn quadrature_boundary_derivative_vanishes_on_the_diagonal() {
        let g = grid(256);
        let n = g.n();
        let dx = g.spacing();
        let p = g.freq(2);
        let q = g.freq(3);
        let f = Field2::from_fn(g, Frame::Null, |a, b| (p * a).cos() * (q * b).sin() + 0.3);
        let inv = dalembert_inverse_quadrature(&f);
        let mut worst = 0.0f64;
        for i in 2..n - 1 {
            let j = n - i;
            if j + 1 > n - 1 {
                continue;
            }
            let fd = (inv.at(0, i + 1, j + 1).re - inv.at(0, i - 1, j - 1).re) / (2.0 * dx);
            worst = worst.max(fd.abs());
        }
        eprintln!("boundary derivative constant {:.3e}", worst / (dx * dx));
        assert!(
            worst <= tol::BC_DERIV_C * dx * dx,
            "boundary derivative {worst}"
        );
    }

    #[test]
    fn lp_route_of_zero_is_zero() {
        let g = grid(64);
        let part = DyadicPartition::new(g).unwrap();
        let f = Field2::zeros(g, Frame::Null, Arity::Scalar);
        assert_eq!(dalembert_inverse_lp(&f, &part).sup_norm(), 0.0);
    }

    #[test]
    fn lp_route_matches_quadrature_inside_the_base_band() {
        // Every frequency of f sits where phi_0 = 1, so the split routes all
        // mass through the shared quadrature path and the two answers are
        // identical to roundoff.
        let g = grid(128);
        let part = DyadicPartition::new(g).unwrap();
        let f = Field2::from_fn(g, Frame::Null, |a, b| {
            (g.freq(5) * a).cos() * (g.freq(3) * b).cos()
                + 0.7 * (g.freq(2) * a + g.freq(4) * b).sin()
                + 0.2
        });
        let lp = dalembert_inverse_lp(&f, &part);
        let quad = dalembert_inverse_quadrature(&f);
        let gap = sup_gap(&lp, &quad) / quad.sup_norm();
        assert!(gap < 1e-10, "base band route gap {gap}");
    }

    fn wide_spectrum_field(g: Grid2<f64>) -> Field2<f64> {
        Field2::from_fn(g, Frame::Null, |a, b| {
            (g.freq(3) * a + g.freq(2) * b).cos()
                + 0.6 * (g.freq(11) * a).sin() * (g.freq(7) * b).cos()
                + 0.4 * (g.freq(23) * a + g.freq(17) * b).sin()
                + 0.3 * (g.freq(6) * a).cos() * (g.freq(29) * b).sin()
        })
    }

    #[test]
    fn route_gap_on_wide_spectra_is_second_order_small() {
        // With genuinely high blocks active the routes differ by the
        // trapezoid error of the direct route, which the spectral route does
        // not make.  The gap is a discretization quantity of order dx^2.
        let mut gaps = Vec::new();
        for n in [128usize, 256] {
            let g = grid(n);
            let part = DyadicPartition::new(g).unwrap();
            let cut = CutoffPair::standard(g);
            let w = cut.window2(Frame::Null);
            let f = wide_spectrum_field(g);
            let lp = dalembert_inverse_lp(&f, &part).windowed(&w);
            let quad = dalembert_inverse_quadrature(&f).windowed(&w);
            gaps.push(sup_gap(&lp, &quad) / quad.sup_norm());
        }
        eprintln!("route gaps {:.3e} {:.3e}", gaps[0], gaps[1]);
        assert!(gaps[0] <= tol::TWO_ROUTE_GAP_N128, "gap at 128 is {}", gaps[0]);
        assert!(gaps[1] <= tol::TWO_ROUTE_GAP_N256, "gap at 256 is {}", gaps[1]);
    }

    #[test]
    fn lp_route_inverts_the_wave_operator_on_an_interior_mode() {
        // For a mode high in both axes only the fully spectral piece acts;
        // the trace corrections are constant along one axis each, so the
        // mixed spectral derivative annihilates them exactly.
        let g = grid(128);
        let n = g.n();
        let part = DyadicPartition::new(g).unwrap();
        let tau = g.freq(16);
        let xi = g.freq(24);
        let f = Field2::from_fn(g, Frame::Null, |a, b| (tau * a + xi * b).cos());
        let inv = dalembert_inverse_lp(&f, &part);
        let back = spectral_derivative(&spectral_derivative(&inv, Axis::Alpha), Axis::Beta)
            .scale(4.0);
        let gap = sup_gap(&back, &f);
        assert!(gap < 1e-8, "spectral inversion residual {gap}");
        for p in 1..n {
            assert_eq!(inv.at(0, p, n - p).norm(), 0.0, "diagonal must vanish");
        }
    }

    #[test]
    fn young_convolution_with_zero_sigma_vanishes() {
        let g = grid(64);
        let sample = sample_sheet(g, HurstPair::new(0.85, 0.8).unwrap(), 9).unwrap();
        let u = Field2::zeros(g, Frame::Null, Arity::Vector2);
        let sigma = DiffusionCoeff {
            kind: SigmaKind::Zero,
            scale: 1.0,
        };
        let f = stochastic_convolution(&u, &sigma, &sample).unwrap();
        assert_eq!(f.sup_norm(), 0.0);
    }

    #[test]
    fn young_convolution_refuses_low_hurst_indices() {
        let g = grid(64);
        let u = Field2::zeros(g, Frame::Null, Arity::Vector2);
        let sigma = DiffusionCoeff {
            kind: SigmaKind::Constant,
            scale: 1.0,
        };
        for (h1, h2) in [(0.5, 0.85), (0.85, 0.4), (0.3, 0.3)] {
            let sample = sample_sheet(g, HurstPair::new(h1, h2).unwrap(), 4).unwrap();
            let r = stochastic_convolution(&u, &sigma, &sample);
            assert!(matches!(r, Err(Error::Regime(_))), "H = ({h1}, {h2})");
        }
    }

    #[test]
    fn young_convolution_telescopes_back_to_the_summand() {
        // The mixed cell difference of the output, times 4 / dx^2, returns
        // sigma(u) times the derivative field exactly: the prefix sums
        // telescope and the lower-limit terms cancel in the alpha difference.
        let g = grid(64);
        let n = g.n();
        let dx = g.spacing();
        let sample = sample_sheet(g, HurstPair::new(0.85, 0.85).unwrap(), 21).unwrap();
        let u = Field2::from_fn_vec2(g, Frame::Null, |a, b| {
            ((0.1 * a).sin(), (0.08 * b).cos())
        });
        let sigma = DiffusionCoeff {
            kind: SigmaKind::SinCos,
            scale: 0.7,
        };
        let f = stochastic_convolution(&u, &sigma, &sample).unwrap();
        let sig = sigma_apply(&sigma, &u);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for c in 0..2 {
            for i in 0..n - 1 {
                for j in 0..n - 1 {
                    let mixed = f.at(c, i + 1, j + 1).re - f.at(c, i + 1, j).re
                        - f.at(c, i, j + 1).re
                        + f.at(c, i, j).re;
                    let want = sig.at(c, i, j).re * sample.derivative().at(0, i, j).re;
                    let got = 4.0 * mixed / (dx * dx);
                    worst = worst.max((got - want).abs());
                    scale = scale.max(want.abs());
                }
            }
        }
        assert!(worst <= 1e-10 * scale.max(1.0), "telescoping gap {worst}");
    }

    #[test]
    fn bilinear_sheet_reproduces_the_smooth_inverse_at_first_order() {
        // Sheet alpha * beta has unit density, so with sigma = 1 the Young
        // sum is a left-corner Riemann approximation of the quadrature route
        // applied to f = 1; the corner rule costs one order.
        for n in [128usize, 256] {
            let g = grid(n);
            let dx = g.spacing();
            let sheet = Field2::from_fn(g, Frame::Null, |a, b| a * b);
            let sample = FbsSample::from_sheet(sheet, HurstPair::new(0.85, 0.85).unwrap(), 0);
            let u = Field2::zeros(g, Frame::Null, Arity::Vector2);
            let sigma = DiffusionCoeff {
                kind: SigmaKind::Constant,
                scale: 1.0,
            };
            let young = stochastic_convolution(&u, &sigma, &sample).unwrap();
            let one = Field2::from_fn(g, Frame::Null, |_, _| 1.0);
            let quad = dalembert_inverse_quadrature(&one);
            let cut = CutoffPair::standard(g);
            let w = cut.window2(Frame::Null);
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let ww = w.at(0, i, j).re;
                    if ww == 0.0 {
                        continue;
                    }
                    worst = worst.max((young.at(0, i, j).re - quad.at(0, i, j).re).abs() * ww);
                }
            }
            eprintln!("bilinear sheet gap at n = {n}: {worst:.3e} (dx = {dx})");
            assert!(worst <= tol::YOUNG_LINEAR_C * dx, "corner-rule gap {worst}");
        }
    }

    #[test]
    fn young_refinement_follows_the_joint_hoelder_rate() {
        // Couple two resolutions by subsampling one fine sheet; the outputs
        // then differ only through the resolution of the Young sums, at the
        // joint rate dx^(h1 + h2 - 1).
        let hurst = HurstPair::new(0.85, 0.85).unwrap();
        let fine_grid = grid(256);
        let coarse_grid = grid(128);
        let nc = coarse_grid.n();
        let sigma = DiffusionCoeff {
            kind: SigmaKind::SinCos,
            scale: 0.5,
        };
        let chart = |g: Grid2<f64>| {
            Field2::from_fn_vec2(g, Frame::Null, |a, b| {
                (0.8 * (0.12 * a).sin() * (0.1 * b).cos(), 0.5 * (0.07 * (a + b)).cos())
            })
        };
        let mut worst_c = 0.0f64;
        for seed in [11u64, 12, 13] {
            let fine = sample_sheet(fine_grid, hurst, seed).unwrap();
            let mut coarse_sheet = Field2::zeros(coarse_grid, Frame::Null, Arity::Scalar);
            for i in 0..nc {
                for j in 0..nc {
                    *coarse_sheet.at_mut(0, i, j) = fine.sheet().at(0, 2 * i, 2 * j);
                }
            }
            let coarse = FbsSample::from_sheet(coarse_sheet, hurst, seed);
            let ff = stochastic_convolution(&chart(fine_grid), &sigma, &fine).unwrap();
            let fc = stochastic_convolution(&chart(coarse_grid), &sigma, &coarse).unwrap();
            let mut sup = 0.0f64;
            for c in 0..2 {
                for i in 0..nc {
                    for j in 0..nc {
                        let a = coarse_grid.coord(i);
                        let b = coarse_grid.coord(j);
                        if a.abs() > 4.0 || b.abs() > 4.0 {
                            continue;
                        }
                        sup = sup.max((fc.at(c, i, j).re - ff.at(c, 2 * i, 2 * j).re).abs());
                    }
                }
            }
            let rate = coarse_grid
                .spacing()
                .powf(hurst.h1 + hurst.h2 - 1.0);
            worst_c = worst_c.max(sup / rate);
        }
        eprintln!("young refinement constant {worst_c:.3}");
        assert!(
            worst_c <= tol::YOUNG_RATE_C,
            "refinement constant {worst_c}"
        );
    }

    fn trig_ensemble(g: Grid2<f64>, seed: u64, count: usize) -> Vec<Field2<f64>> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let terms: Vec<(f64, f64, f64, f64)> = (0..8)
                    .map(|_| {
                        (
                            rng.gen_range(-1.0..1.0),
                            g.freq(rng.gen_range(0..=20)) * if rng.gen() { 1.0 } else { -1.0 },
                            g.freq(rng.gen_range(0..=20)) * if rng.gen() { 1.0 } else { -1.0 },
                            rng.gen_range(0.0..std::f64::consts::TAU),
                        )
                    })
                    .collect();
                Field2::from_fn(g, Frame::Null, |a, b| {
                    terms
                        .iter()
                        .map(|&(amp, ta, xb, ph)| amp * (ta * a + xb * b + ph).cos())
                        .sum()
                })
            })
            .collect()
    }

    #[test]
    fn inverse_estimate_rejects_bad_exponents() {
        let g = grid(64);
        let part = DyadicPartition::new(g).unwrap();
        let cut = CutoffPair::standard(g);
        let ens = trig_ensemble(g, 1, 1);
        for (s, d) in [(0.6, 0.6), (0.8, 0.5), (0.8, 0.9), (1.0, 0.8)] {
            let r = inverse_estimate_check(&ens, &part, &cut, s, d);
            assert!(matches!(r, Err(Error::Config(_))), "(s, d) = ({s}, {d})");
        }
    }

    #[test]
    fn inverse_estimate_skips_vanishing_inputs() {
        let g = grid(64);
        let part = DyadicPartition::new(g).unwrap();
        let cut = CutoffPair::standard(g);
        let mut ens = trig_ensemble(g, 2, 2);
        ens.push(Field2::zeros(g, Frame::Null, Arity::Scalar));
        let r = inverse_estimate_check(&ens, &part, &cut, 0.8, 0.8).unwrap();
        assert_eq!(r.count, 2);
        assert_eq!(r.skipped, 1);
    }

    #[test]
    fn inverse_estimate_ratio_is_bounded_and_refinement_stable() {
        let g1 = grid(128);
        let g2 = grid(256);
        let r1 = {
            let part = DyadicPartition::new(g1).unwrap();
            let cut = CutoffPair::standard(g1);
            inverse_estimate_check(&trig_ensemble(g1, 7, 12), &part, &cut, 0.8, 0.8).unwrap()
        };
        let r2 = {
            let part = DyadicPartition::new(g2).unwrap();
            let cut = CutoffPair::standard(g2);
            inverse_estimate_check(&trig_ensemble(g2, 7, 12), &part, &cut, 0.8, 0.8).unwrap()
        };
        eprintln!(
            "estimate ratios: max {:.3} / {:.3}, mean {:.3} / {:.3}",
            r1.max_ratio, r2.max_ratio, r1.mean_ratio, r2.mean_ratio
        );
        assert!(r1.max_ratio <= tol::INVERSE_RATIO_MAX);
        assert!(r2.max_ratio <= tol::INVERSE_RATIO_MAX);
        let drift = r1.max_ratio / r2.max_ratio;
        assert!(
            (1.0 / tol::INVERSE_RATIO_REFINE..=tol::INVERSE_RATIO_REFINE).contains(&drift),
            "refinement drift {drift}"
        );
    }

    #[test]
    fn inverse_estimate_holds_on_rough_noise() {
        let g = grid(128);
        let part = DyadicPartition::new(g).unwrap();
        let cut = CutoffPair::standard(g);
        let rough: Vec<Field2<f64>> = [31u64, 32, 33]
            .iter()
            .map(|&seed| {
                sample_sheet(g, HurstPair::new(0.85, 0.85).unwrap(), seed)
                    .unwrap()
                    .derivative()
                    .clone()
            })
            .collect();
        let r = inverse_estimate_check(&rough, &part, &cut, 0.8, 0.8).unwrap();
        eprintln!("rough estimate max ratio {:.3}", r.max_ratio);
        assert!(r.max_ratio <= tol::INVERSE_RATIO_MAX, "ratio {}", r.max_ratio);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn quadrature_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let g = grid(64);
            let f1 = Field2::from_fn(g, Frame::Null, |x, y| (g.freq(1) * x).sin() + 0.2 * y.cos());
            let f2 = Field2::from_fn(g, Frame::Null, |x, y| (g.freq(2) * (x + y)).cos());
            let combo = f1.scale(a).add(&f2.scale(b));
            let lhs = dalembert_inverse_quadrature(&combo);
            let rhs = dalembert_inverse_quadrature(&f1)
                .scale(a)
                .add(&dalembert_inverse_quadrature(&f2).scale(b));
            let scale = rhs.sup_norm().max(1.0);
            prop_assert!(sup_gap(&lhs, &rhs) <= 1e-10 * scale);
        }

        #[test]
        fn homogeneous_solution_is_additive_in_the_data(a in -2.0f64..2.0) {
            let g = grid(64);
            let d1 = InitialData::from_fn(g, 0.8, |x| ((0.2 * x).sin(), 0.0), |x| (0.1 * x.cos(), 0.0));
            let d2 = InitialData::from_fn(g, 0.8, |x| (0.0, (0.3 * x).cos()), |x| (0.0, 0.2 * (0.1 * x).sin()));
            let scaled: Vec<f64> = d1.u0(0).iter().map(|v| a * v).collect();
            let scaled1: Vec<f64> = d1.u1(0).iter().map(|v| a * v).collect();
            let sum = InitialData::new(
                g,
                [scaled, d2.u0(1).to_vec()],
                [scaled1, d2.u1(1).to_vec()],
                0.8,
            ).unwrap();
            let lhs = homogeneous_solution(&sum);
            let rhs = homogeneous_solution(&d1).scale(a).add(&homogeneous_solution(&d2));
            // Component 0 of d2 and component 1 of d1 are zero, so the sum
            // data splits exactly and the fields must agree to roundoff.
            let scale = rhs.sup_norm().max(1.0);
            prop_assert!(sup_gap(&lhs, &rhs) <= 1e-12 * scale);
        }
    }
}
