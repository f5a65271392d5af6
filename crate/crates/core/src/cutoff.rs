//! Smooth compactly supported bump machinery.
//!
//! One C^infinity generator drives everything: `g(t) = exp(-1/t)` for t > 0
//! (else 0), combined into the even step
//!
//! ```text
//! psi_step(x) = g(2 - |x|) / (g(2 - |x|) + g(|x| - 1))
//! ```
//!
//! which is identically 1 on [-1, 1] and supported in [-2, 2]. The dyadic
//! partition in [`crate::lp`] scales this step; the solver cutoffs here dilate
//! it: eta(x) = chi(x) = psi_step(x/2) is 1 on [-2, 2] with support [-4, 4],
//! and psi = eta / integral(eta) is the unit-mass bump used to remove the data
//! mean. All are even and smooth, so windowing never injects frequency tails
//! beyond the certified decay.

use crate::grid::{Field2, Frame, Grid2};
use crate::num::Real;

/// `exp(-1/t)` continued by 0 for t <= 0; C^infinity on the whole line.
pub fn bump_g<T: Real>(t: T) -> T {
    if t > T::zero() {
        (-t.recip()).exp()
    } else {
        T::zero()
    }
}

/// Smooth even step: 1 on [-1, 1], 0 outside (-2, 2), strictly between
/// in the transition annuli.
pub fn psi_step<T: Real>(x: T) -> T {
    let a = bump_g(T::of(2.0) - x.abs());
    let b = bump_g(x.abs() - T::one());
    a / (a + b)
}

/// The pair of solver cutoffs (eta, chi) plus the unit-mass bump psi.
///
/// eta and chi are the same dilated step (kept as two accessors because they
/// window different arguments); psi is eta normalized to unit integral by the
/// trapezoid rule on the carrier grid, which makes the discrete mass exactly 1.
#[derive(Debug, Clone)]
pub struct CutoffPair<T> {
    grid: Grid2<T>,
    eta_axis: Vec<T>,
    psi_scale: T,
}

impl<T: Real> CutoffPair<T> {
    /// Builds the standard cutoffs sampled on `grid`'s axis.
    pub fn standard(grid: Grid2<T>) -> Self {
        let eta_axis: Vec<T> = grid.coords().iter().map(|&x| Self::eta_value(x)).collect();
        // Periodic trapezoid = plain Riemann sum; eta vanishes at the wrap.
        let mass = eta_axis.iter().fold(T::zero(), |a, &v| a + v) * grid.spacing();
        Self {
            grid,
            eta_axis,
            psi_scale: mass.recip(),
        }
    }

    fn eta_value(x: T) -> T {
        psi_step(x / T::of(2.0))
    }

    pub fn grid(&self) -> Grid2<T> {
        self.grid
    }

    /// eta at an arbitrary coordinate (closed form, not interpolated).
    pub fn eta(&self, x: T) -> T {
        Self::eta_value(x)
    }

    /// chi coincides with eta; separate accessor mirrors its separate role.
    pub fn chi(&self, x: T) -> T {
        Self::eta_value(x)
    }

    /// eta_T(x) = eta(x / t): support [-4t, 4t], plateau [-2t, 2t].
    pub fn eta_scaled(&self, x: T, t: T) -> T {
        Self::eta_value(x / t)
    }

    /// Unit-mass bump psi = eta / integral(eta).
    pub fn psi(&self, x: T) -> T {
        Self::eta_value(x) * self.psi_scale
    }

    /// eta sampled on the axis nodes.
    pub fn eta_axis(&self) -> &[T] {
        &self.eta_axis
    }

    /// psi sampled on the axis nodes.
    pub fn psi_axis(&self) -> Vec<T> {
        self.eta_axis.iter().map(|&v| v * self.psi_scale).collect()
    }

    /// Discrete mass of psi (trapezoid); equals 1 by construction.
    pub fn psi_mass(&self) -> T {
        self.psi_axis().iter().fold(T::zero(), |a, &v| a + v) * self.grid.spacing()
    }

    /// Scalar window field eta(alpha) eta(beta) on the carrier grid.
    pub fn window2(&self, frame: Frame) -> Field2<T> {
        let n = self.grid.n();
        let mut w = Field2::zeros(self.grid, frame, crate::grid::Arity::Scalar);
        for i in 0..n {
            for j in 0..n {
                w.at_mut(0, i, j).re = self.eta_axis[i] * self.eta_axis[j];
            }
        }
        w
    }

    /// Window field eta(lambda alpha) eta(lambda beta).
    pub fn window2_scaled(&self, frame: Frame, lambda: T) -> Field2<T> {
        let n = self.grid.n();
        let mut w = Field2::zeros(self.grid, frame, crate::grid::Arity::Scalar);
        for i in 0..n {
            let ei = Self::eta_value(self.grid.coord(i) * lambda);
            for j in 0..n {
                w.at_mut(0, i, j).re = ei * Self::eta_value(self.grid.coord(j) * lambda);
            }
        }
        w
    }
}
