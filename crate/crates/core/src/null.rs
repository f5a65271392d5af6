//! Change of frame between Cartesian (t, x) and null (alpha, beta)
//! coordinates, alpha = t + x, beta = t - x, on a shared grid.
//!
//! Both directions are index maps, not quadratures. A null node
//! (alpha_p, beta_q) pulls back to (t, x) = ((alpha+beta)/2, (alpha-beta)/2),
//! which is a node of the once-refined grid: [`to_null`] therefore upsamples
//! by two (exact for the trigonometric interpolant) and gathers
//!
//! ```text
//! u*(p, q) = u_fine[p + q, p - q + N],
//! ```
//!
//! with no index wrap for any target. [`from_null`] inverts the map by a
//! plain gather on the original grid with periodic wrap. Values are exact
//! wherever no wrap occurs: the closed diamond |t + x| <= L - dx,
//! |t - x| <= L - dx (see [`in_diamond`]). The four corner triangles of the
//! Cartesian square read periodic phantom values and carry no contract; every
//! field of interest is windowed well inside the diamond before use.

use crate::grid::{Field2, Frame, Grid2};
use crate::lp::{hyperbolic_norm, mixed_norm};
use crate::num::Real;
use crate::spectral::upsample2;

/// Maps a Cartesian-frame field to the null frame on the same grid.
pub fn to_null<T: Real>(f: &Field2<T>) -> Field2<T> {
    assert_eq!(f.frame(), Frame::Cartesian, "to_null expects a Cartesian field");
    let grid = f.grid();
    let n = grid.n();
    let fine = upsample2(f);
    let mut out = Field2::zeros(grid, Frame::Null, f.arity());
    for c in 0..f.num_comps() {
        for p in 0..n {
            for q in 0..n {
                *out.at_mut(c, p, q) = fine.at(c, p + q, p + n - q);
            }
        }
    }
    out
}

/// Maps a null-frame field back to the Cartesian frame on the same grid.
///
/// Exact on the diamond; the corner triangles wrap periodically.
pub fn from_null<T: Real>(f: &Field2<T>) -> Field2<T> {
    assert_eq!(f.frame(), Frame::Null, "from_null expects a null field");
    let grid = f.grid();
    let n = grid.n();
    let mut out = Field2::zeros(grid, Frame::Cartesian, f.arity());
    for c in 0..f.num_comps() {
        for i in 0..n {
            for j in 0..n {
                let p = (i + j + n / 2) % n;
                let q = (i + n + n / 2 - j) % n;
                *out.at_mut(c, i, j) = f.at(c, p, q);
            }
        }
    }
    out
}

/// Whether Cartesian node (i, j) lies in the region where [`from_null`] and
/// the round trip are exact (neither gathered index wraps).
pub fn in_diamond<T: Real>(grid: Grid2<T>, i: usize, j: usize) -> bool {
    // p = i + j - N/2 and q = i - j + N/2 must both land in [0, N).
    let n = grid.n();
    let p_ok = i + j >= n / 2 && i + j < n + n / 2;
    let q_ok = i + n / 2 >= j && i + n / 2 - j < n;
    p_ok && q_ok
}

/// Ratio of the null-frame mixed norm of the transformed field to the
/// hyperbolic norm of the Cartesian original; the computable probe of the
/// frame-change isomorphism. The field must be supported in the diamond for
/// the ratio to be meaningful.
pub fn isomorphism_ratio<T: Real>(f: &Field2<T>, sexp: T, dexp: T) -> T {
    assert_eq!(f.frame(), Frame::Cartesian, "ratio starts from a Cartesian field");
    mixed_norm(&to_null(f), sexp, dexp) / hyperbolic_norm(f, sexp, dexp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::CutoffPair;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn grid() -> Grid2<f64> {
        Grid2::new(16.0, 128).unwrap()
    }

    #[test]
    fn gaussian_rotates_to_the_closed_form() {
        let g = grid();
        let f = Field2::from_fn(g, Frame::Cartesian, |t, x| (-(t * t + x * x) / 2.0).exp());
        let nf = to_null(&f);
        let mut worst: f64 = 0.0;
        for p in 0..g.n() {
            for q in 0..g.n() {
                let (a, b) = (g.coord(p), g.coord(q));
                let want = (-(a * a + b * b) / 4.0).exp();
                worst = worst.max((nf.at(0, p, q).re - want).abs());
            }
        }
        assert!(worst < 1e-11, "worst node error {worst}");
        assert!(nf.max_imag() < 1e-12);
    }

    #[test]
    fn round_trip_is_exact_on_the_diamond_for_arbitrary_data() {
        let g = grid();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let f = Field2::from_fn(g, Frame::Cartesian, |_, _| rng.gen_range(-1.0..1.0));
        let back = from_null(&to_null(&f));
        assert_eq!(back.frame(), Frame::Cartesian);
        let mut worst: f64 = 0.0;
        let mut diamond_nodes = 0usize;
        for i in 0..g.n() {
            for j in 0..g.n() {
                if in_diamond(g, i, j) {
                    diamond_nodes += 1;
                    worst = worst.max((back.at(0, i, j) - f.at(0, i, j)).norm());
                }
            }
        }
        // The diamond holds half the nodes (area ratio), up to the boundary.
        assert!(diamond_nodes > g.n() * g.n() * 2 / 5, "{diamond_nodes}");
        assert!(worst < 1e-12, "worst diamond error {worst}");
    }

    #[test]
    fn from_null_of_a_mode_is_the_rotated_mode_everywhere() {
        let g = grid();
        let (m0, m1) = (5i64, -9i64);
        let tau = std::f64::consts::PI * m0 as f64 / 16.0;
        let xi = std::f64::consts::PI * m1 as f64 / 16.0;
        let nf = Field2::from_fn_complex(g, Frame::Null, |a, b| {
            Complex64::from_polar(1.0, tau * a + xi * b)
        });
        let cf = from_null(&nf);
        let mut worst: f64 = 0.0;
        for i in 0..g.n() {
            for j in 0..g.n() {
                let (t, x) = (g.coord(i), g.coord(j));
                let want = Complex64::from_polar(1.0, (tau + xi) * t + (tau - xi) * x);
                worst = worst.max((cf.at(0, i, j) - want).norm());
            }
        }
        // Modes are 2L-periodic in alpha and beta, so even the wrapped
        // corners are exact.
        assert!(worst < 1e-13, "worst error {worst}");
    }

    #[test]
    fn band_limited_null_fields_round_trip_through_cartesian() {
        let g = grid();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let n4 = g.n() as i64 / 4;
        let mut f = Field2::zeros(g, Frame::Null, crate::grid::Arity::Scalar);
        for _ in 0..12 {
            let m0 = rng.gen_range(-n4 + 1..n4);
            let m1 = rng.gen_range(-n4 + 1..n4);
            let amp = rng.gen_range(-1.0..1.0);
            let tau = std::f64::consts::PI * m0 as f64 / 16.0;
            let xi = std::f64::consts::PI * m1 as f64 / 16.0;
            let term = Field2::from_fn(g, Frame::Null, |a, b| amp * (tau * a + xi * b).cos());
            f = f.add(&term);
        }
        let back = to_null(&from_null(&f));
        assert!(back.sub(&f).sup_norm() < 1e-10);
    }

    #[test]
    fn windowed_coordinate_field_maps_pointwise() {
        let g = Grid2::<f64>::new(16.0, 512).unwrap();
        let cut = CutoffPair::standard(g);
        let f = Field2::from_fn(g, Frame::Cartesian, |t, x| cut.eta(t) * cut.eta(x) * t);
        let nf = to_null(&f);
        let mut worst: f64 = 0.0;
        for p in 0..g.n() {
            for q in 0..g.n() {
                let (a, b) = (g.coord(p), g.coord(q));
                let (t, x) = ((a + b) / 2.0, (a - b) / 2.0);
                let want = cut.eta(t) * cut.eta(x) * t;
                worst = worst.max((nf.at(0, p, q).re - want).abs());
            }
        }
        // Limited only by the window's trigonometric interpolation error;
        // the bump is Gevrey-class, so this decays like exp(-c sqrt(N)).
        // Measured: about 1e-5 at N = 512.
        assert!(worst < 1e-4, "worst node error {worst}");
    }

    #[test]
    fn transforms_preserve_vector_arity() {
        let g = grid();
        let f = Field2::from_fn_vec2(g, Frame::Cartesian, |t, x| {
            let bump = (-(t * t + x * x) / 2.0).exp();
            (bump * t, bump * x)
        });
        let nf = to_null(&f);
        assert_eq!(nf.arity(), crate::grid::Arity::Vector2);
        assert_eq!(from_null(&nf).arity(), crate::grid::Arity::Vector2);
    }

    #[test]
    #[should_panic(expected = "expects a Cartesian field")]
    fn to_null_rejects_null_frame_input() {
        let g = grid();
        let f = Field2::zeros(g, Frame::Null, crate::grid::Arity::Scalar);
        let _ = to_null(&f);
    }

    #[test]
    fn isomorphism_ratio_is_moderate_for_windowed_fields() {
        let g = grid();
        let cut = CutoffPair::standard(g);
        let window = cut.window2(Frame::Cartesian);
        for seed in 0..5u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(400 + seed);
            let mut f = Field2::zeros(g, Frame::Cartesian, crate::grid::Arity::Scalar);
            for _ in 0..10 {
                let m0: i64 = rng.gen_range(-12..13);
                let m1: i64 = rng.gen_range(-12..13);
                let amp = rng.gen_range(-1.0..1.0);
                let tau = std::f64::consts::PI * m0 as f64 / 16.0;
                let xi = std::f64::consts::PI * m1 as f64 / 16.0;
                let ph = rng.gen_range(0.0..std::f64::consts::TAU);
                let term =
                    Field2::from_fn(g, Frame::Cartesian, |t, x| amp * (tau * t + xi * x + ph).cos());
                f = f.add(&term);
            }
            let f = f.windowed(&window);
            let r = isomorphism_ratio(&f, 0.8, 0.8);
            assert!(
                (crate::tol::ISO_RATIO_LO..=crate::tol::ISO_RATIO_HI).contains(&r),
                "seed {seed}: ratio {r}"
            );
        }
    }
}
