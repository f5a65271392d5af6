//! 2-D FFT analysis/synthesis and spectral calculus on the torus.
//!
//! The transform pair approximates the continuous Fourier transform of a
//! field sampled on [-L, L)^2:
//!
//! ```text
//! F[m, n] = d^2 Sum_{i,j} f(x_i, y_j) exp(-i (tau_m x_i + xi_n y_j))
//! f(x_i, y_j) = (2L)^{-2} Sum_{m,n} F[m, n] exp(+i (tau_m x_i + xi_n y_j))
//! ```
//!
//! so Parseval reads `Sum |f|^2 d^2 = (2L)^{-2} Sum |F|^2`, and the weighted
//! sums in the norm module reduce to the discrete L^2 norm at zero smoothness.
//! Because the nodes are x_i = -L + i d, the phase relative to a plain FFT is
//! exp(i tau_m L) = (-1)^m, which has the parity of the FFT bin.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::grid::{Field2, Grid2, Spectrum2};
use crate::num::Real;

/// In-place 2-D FFT over a row-major square block.
fn fft2_in_place<T: Real>(data: &mut [Complex<T>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    // Rows are contiguous.
    for row in data.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    // Columns via transpose, row pass, transpose back.
    transpose_square(data, n);
    for row in data.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    transpose_square(data, n);
}

fn transpose_square<T: Copy>(data: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Forward transform of every component of a field.
pub fn dft2<T: Real>(f: &Field2<T>) -> Spectrum2<T> {
    let grid = f.grid();
    let n = grid.n();
    let d2 = grid.spacing() * grid.spacing();
    let comps = (0..f.num_comps())
        .map(|c| {
            let mut buf = f.comp(c).to_vec();
            fft2_in_place(&mut buf, n, false);
            for (idx, z) in buf.iter_mut().enumerate() {
                let (k0, k1) = (idx / n, idx % n);
                let sign = if (k0 + k1) % 2 == 0 { T::one() } else { -T::one() };
                *z *= sign * d2;
            }
            buf
        })
        .collect();
    Spectrum2::new(grid, f.frame(), comps)
}

/// Inverse transform back to node values.
pub fn idft2<T: Real>(s: &Spectrum2<T>) -> Field2<T> {
    let grid = s.grid();
    let n = grid.n();
    let inv_scale = T::one() / (grid.spacing() * grid.spacing() * T::of((n * n) as f64));
    let comps = (0..s.num_comps())
        .map(|c| {
            let mut buf = s.comp(c).to_vec();
            for (idx, z) in buf.iter_mut().enumerate() {
                let (k0, k1) = (idx / n, idx % n);
                let sign = if (k0 + k1) % 2 == 0 { T::one() } else { -T::one() };
                *z *= sign * inv_scale;
            }
            fft2_in_place(&mut buf, n, true);
            buf
        })
        .collect();
    Field2::from_components(grid, s.frame(), comps)
}

/// Axis selector for [`spectral_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// First coordinate (alpha, or t).
    Alpha,
    /// Second coordinate (beta, or x).
    Beta,
}

/// Exact derivative of the trigonometric interpolant along one axis
/// (multiplication by i tau resp. i xi; the Nyquist bin is zeroed, the
/// symmetric convention for an odd derivative of a real field).
pub fn spectral_derivative<T: Real>(f: &Field2<T>, axis: Axis) -> Field2<T> {
    let grid = f.grid();
    let nyquist = grid.n() / 2;
    let mut s = dft2(f);
    let n = grid.n();
    for c in 0..s.num_comps() {
        let comp = s.comp_mut(c);
        for k0 in 0..n {
            for k1 in 0..n {
                let k = match axis {
                    Axis::Alpha => k0,
                    Axis::Beta => k1,
                };
                let w = if k == nyquist {
                    Complex::new(T::zero(), T::zero())
                } else {
                    Complex::new(
                        T::zero(),
                        match axis {
                            Axis::Alpha => grid.freq(k0),
                            Axis::Beta => grid.freq(k1),
                        },
                    )
                };
                comp[k0 * n + k1] *= w;
            }
        }
    }
    idft2(&s)
}

/// Band-limited 2x refinement: returns the same field sampled on the grid
/// with 2N points (same half-width). Exact for the trigonometric interpolant;
/// the Nyquist coefficients are split symmetrically so real fields stay real.
pub fn upsample2<T: Real>(f: &Field2<T>) -> Field2<T> {
    let grid = f.grid();
    let n = grid.n();
    let fine_grid = Grid2::new(grid.half_width(), 2 * n).expect("doubled grid is valid");
    let s = dft2(f);
    let half = T::of(0.5);
    let comps = (0..s.num_comps())
        .map(|c| {
            let coarse = s.comp(c);
            let mut fine =
                vec![Complex::new(T::zero(), T::zero()); 4 * n * n];
            for k0 in 0..n {
                let m0 = grid.freq_index(k0);
                for k1 in 0..n {
                    let m1 = grid.freq_index(k1);
                    let z = coarse[k0 * n + k1];
                    // Signed indices -N/2 split onto +/- N/2 of the fine grid.
                    let targets0: &[i64] = if m0 == -(n as i64) / 2 {
                        &[-(n as i64) / 2, n as i64 / 2]
                    } else {
                        std::slice::from_ref(&m0)
                    };
                    let targets1: &[i64] = if m1 == -(n as i64) / 2 {
                        &[-(n as i64) / 2, n as i64 / 2]
                    } else {
                        std::slice::from_ref(&m1)
                    };
                    let w = half.powi((targets0.len() + targets1.len() - 2) as i32);
                    for &t0 in targets0 {
                        for &t1 in targets1 {
                            let f0 = t0.rem_euclid(2 * n as i64) as usize;
                            let f1 = t1.rem_euclid(2 * n as i64) as usize;
                            fine[f0 * 2 * n + f1] = z * w;
                        }
                    }
                }
            }
            fine
        })
        .collect::<Vec<_>>();
    idft2(&Spectrum2::new(fine_grid, f.frame(), comps))
}

/// 1-D analogue of [`dft2`] for axis data: `F[m] = d Sum_i v_i e^{-i tau_m x_i}`.
pub fn dft1<T: Real>(values: &[Complex<T>], grid: Grid2<T>) -> Vec<Complex<T>> {
    let n = grid.n();
    assert_eq!(values.len(), n, "axis data length mismatch");
    let mut buf = values.to_vec();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    fft.process(&mut buf);
    let d = grid.spacing();
    for (k, z) in buf.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        *z *= sign * d;
    }
    buf
}

/// Evaluates the 1-D trigonometric interpolant at an arbitrary point.
/// The Nyquist coefficient contributes with the symmetric cosine convention.
pub fn trig_eval1<T: Real>(coeffs: &[Complex<T>], grid: Grid2<T>, x: T) -> Complex<T> {
    let n = grid.n();
    assert_eq!(coeffs.len(), n, "coefficient length mismatch");
    let two_l = T::of(2.0) * grid.half_width();
    let mut acc = Complex::new(T::zero(), T::zero());
    for (k, &z) in coeffs.iter().enumerate() {
        let tau = grid.freq(k);
        let phase = tau * x;
        let e = Complex::new(phase.cos(), phase.sin());
        if k == n / 2 {
            // cos(tau x) = (e^{i tau x} + e^{-i tau x}) / 2
            acc += z * Complex::new(phase.cos(), T::zero());
        } else {
            acc += z * e;
        }
    }
    acc / two_l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Frame;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn rand_field(grid: Grid2<f64>, seed: u64) -> Field2<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Field2::from_fn_complex(grid, Frame::Null, |_, _| {
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn constant_concentrates_at_zero_mode() {
        let grid = Grid2::<f64>::new(16.0, 64).unwrap();
        let c = 2.75;
        let f = Field2::from_fn(grid, Frame::Null, |_, _| c);
        let s = dft2(&f);
        let expected = c * 32.0f64.powi(2); // c (2L)^2
        assert!((s.at(0, 0, 0).re - expected).abs() < 1e-9);
        assert!(s.at(0, 0, 0).im.abs() < 1e-9);
        for k0 in 0..64 {
            for k1 in 0..64 {
                if (k0, k1) != (0, 0) {
                    assert!(
                        s.at(0, k0, k1).norm() < 1e-9,
                        "leakage at ({k0},{k1})"
                    );
                }
            }
        }
    }

    #[test]
    fn single_mode_is_orthogonal_to_the_rest() {
        let grid = Grid2::<f64>::new(16.0, 64).unwrap();
        let (m0, m1) = (3usize, 5usize);
        let f = Field2::from_fn_complex(grid, Frame::Null, |a, b| {
            let phase = grid.freq(m0) * a + grid.freq(m1) * b;
            Complex::new(phase.cos(), phase.sin())
        });
        let s = dft2(&f);
        let expected = 32.0f64.powi(2); // (2L)^2
        for k0 in 0..64 {
            for k1 in 0..64 {
                let got = s.at(0, k0, k1).norm();
                if (k0, k1) == (m0, m1) {
                    assert!((got - expected).abs() < 1e-12 * expected);
                } else {
                    assert!(got < 1e-12 * expected, "leakage at ({k0},{k1}): {got}");
                }
            }
        }
    }

    #[test]
    fn round_trip_identity() {
        let grid = Grid2::<f64>::new(16.0, 64).unwrap();
        let f = rand_field(grid, 42);
        let back = idft2(&dft2(&f));
        assert!(back.sub(&f).sup_norm() < 1e-10);
    }

    #[test]
    fn parseval_identity() {
        let grid = Grid2::<f64>::new(16.0, 64).unwrap();
        for seed in 0..20u64 {
            let f = rand_field(grid, seed);
            let s = dft2(&f);
            let l2 = f.l2_norm();
            let spec: f64 = s.comp(0).iter().map(|z| z.norm_sqr()).sum();
            let spec = spec.sqrt() / 32.0; // /(2L)
            assert!(
                (l2 - spec).abs() < 1e-10 * l2.max(1.0),
                "Parseval violated: {l2} vs {spec}"
            );
        }
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // f = exp(-(a^2+b^2)/2)  =>  F = 2 pi exp(-(tau^2+xi^2)/2).
        // Periodization and aliasing errors are ~exp(-L^2/2), far below 1e-8.
        let grid = Grid2::<f64>::new(16.0, 128).unwrap();
        let f = Field2::from_fn(grid, Frame::Null, |a, b| (-(a * a + b * b) / 2.0).exp());
        let s = dft2(&f);
        let peak = 2.0 * std::f64::consts::PI;
        for k0 in 0..128 {
            for k1 in 0..128 {
                let tau = grid.freq(k0);
                let xi = grid.freq(k1);
                let expected = peak * (-(tau * tau + xi * xi) / 2.0).exp();
                let got = s.at(0, k0, k1);
                assert!(
                    (got.re - expected).abs() < 1e-8 * peak && got.im.abs() < 1e-8 * peak,
                    "bin ({k0},{k1}): {} vs {expected}",
                    got.re
                );
            }
        }
    }

    #[test]
    fn derivative_of_single_mode_is_exact() {
        let grid = Grid2::<f64>::new(16.0, 64).unwrap();
        let tau = grid.freq(1);
        let f = Field2::from_fn(grid, Frame::Null, |a, _| (tau * a).sin());
        let df = spectral_derivative(&f, Axis::Alpha);
        let exact = Field2::from_fn(grid, Frame::Null, |a, _| tau * (tau * a).cos());
        assert!(df.sub(&exact).sup_norm() < 1e-10);
        // Cross-axis derivative of an alpha-only field vanishes.
        assert!(spectral_derivative(&f, Axis::Beta).sup_norm() < 1e-12);
        // Derivative of a constant vanishes.
        let c = Field2::from_fn(grid, Frame::Null, |_, _| 4.0);
        assert!(spectral_derivative(&c, Axis::Alpha).sup_norm() < 1e-10);
    }

    #[test]
    fn derivative_matches_finite_differences_on_smooth_field() {
        let grid = Grid2::<f64>::new(16.0, 256).unwrap();
        let f = Field2::from_fn(grid, Frame::Null, |a, b| {
            (-(a * a + b * b) / 4.0).exp() * (a + 0.3 * b)
        });
        let df = spectral_derivative(&f, Axis::Alpha);
        let n = grid.n();
        let h = grid.spacing();
        let mut worst: f64 = 0.0;
        for i in 1..n - 1 {
            for j in 0..n {
                let fd = (f.at(0, i + 1, j).re - f.at(0, i - 1, j).re) / (2.0 * h);
                worst = worst.max((df.at(0, i, j).re - fd).abs());
            }
        }
        // Centered differences are O(d^2); the bound is |f'''|_sup d^2 / 6
        // with |f'''| ~ 1.4 for this profile, plus margin.
        assert!(worst < 0.5 * h * h, "spectral vs FD mismatch {worst}");
    }

    #[test]
    fn upsample_preserves_coarse_nodes_and_interpolates_modes() {
        let grid = Grid2::<f64>::new(16.0, 32).unwrap();
        let (m0, m1) = (2usize, 7usize);
        let f = Field2::from_fn_complex(grid, Frame::Null, |a, b| {
            let phase = grid.freq(m0) * a + grid.freq(m1) * b;
            Complex::new(phase.cos(), phase.sin())
        });
        let fine = upsample2(&f);
        assert_eq!(fine.grid().n(), 64);
        let fg = fine.grid();
        for i in 0..64 {
            for j in 0..64 {
                let phase = grid.freq(m0) * fg.coord(i) + grid.freq(m1) * fg.coord(j);
                let want = Complex::new(phase.cos(), phase.sin());
                let got = fine.at(0, i, j);
                assert!((got - want).norm() < 1e-10, "node ({i},{j})");
            }
        }
    }

    #[test]
    fn upsample_keeps_real_fields_real_with_nyquist_energy() {
        let grid = Grid2::<f64>::new(16.0, 32).unwrap();
        // Nyquist-mode cosine: alternating +-1 samples.
        let f = Field2::from_fn(grid, Frame::Null, |a, _| (grid.max_freq() * a).cos());
        let fine = upsample2(&f);
        assert!(fine.max_imag() < 1e-12);
        // Coarse nodes preserved.
        for i in 0..32 {
            for j in 0..32 {
                assert!((fine.at(0, 2 * i, 2 * j).re - f.at(0, i, j).re).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn one_dimensional_transform_and_evaluation() {
        let grid = Grid2::<f64>::new(16.0, 64).unwrap();
        let tau = grid.freq(3);
        let vals: Vec<Complex<f64>> = grid
            .coords()
            .iter()
            .map(|&x| Complex::new((tau * x).cos(), 0.0))
            .collect();
        let coeffs = dft1(&vals, grid);
        // Energy sits at bins 3 and N-3 with value (2L)/2 each.
        assert!((coeffs[3].re - 16.0).abs() < 1e-10);
        assert!((coeffs[61].re - 16.0).abs() < 1e-10);
        // Off-grid evaluation reproduces the cosine.
        for &x in &[0.37, -1.2345, 7.7, -15.9] {
            let got = trig_eval1(&coeffs, grid, x);
            assert!((got.re - (tau * x).cos()).abs() < 1e-10, "x = {x}");
            assert!(got.im.abs() < 1e-10);
        }
    }
}
