//! Numerical core for desk-scale study of stochastic geometric wave equations
//! in null coordinates, driven by fractional Brownian sheets.
//!
//! The crate provides, as composable modules:
//!
//! - [`grid`] / [`spectral`]: periodic grids, frame-tagged fields, FFT
//!   calculus with a continuum-compatible normalization;
//! - [`lp`]: a smooth dyadic Littlewood-Paley partition and the product,
//!   mixed, hyperbolic and Besov norm families built on it;
//! - [`null`]: exact null-coordinate transforms (alpha, beta) = (t + x, t - x)
//!   and the mixed/hyperbolic norm comparison;
//! - [`fbs`]: exact-in-law fractional Brownian sheet synthesis via per-axis
//!   Cholesky factors and a Kronecker product structure;
//! - [`geometry`]: polynomial Christoffel tables, the null-form nonlinearity,
//!   and the bounded diffusion coefficient catalog;
//! - [`wave`]: homogeneous wave data, two routes to the inverse wave operator
//!   (triangular quadrature and a frequency-split construction), and pathwise
//!   Young convolution against rough noise;
//! - [`solver`]: scaled cutoff Picard iteration, the scaling search, inverse
//!   rescaling, residual certificates, and diagonal gluing;
//! - [`accept`]: the executable acceptance suite tying the above together.
//!
//! All numerics are generic over the scalar type through [`num::Real`]
//! (`f32` or `f64`); the aliases at the crate root fix `f64`, which is what
//! the CLI and the acceptance suite use.

// Tensor contractions and grid stencils index by slot throughout; iterator
// rewrites of Gamma^k_{ab} sums or (i, j) sweeps would obscure the math.
#![allow(clippy::needless_range_loop)]

pub mod accept;
pub mod config;
pub mod cutoff;
pub mod error;
pub mod fbs;
pub mod geometry;
pub mod grid;
pub mod lp;
pub mod null;
pub mod num;
pub mod spectral;
pub mod tol;
pub mod wave;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Arity, Field2, Frame, Grid2, Spectrum2};
pub use num::Real;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `f64` grid, the production scalar type.
pub type Grid2F64 = Grid2<f64>;
/// `f64` field.
pub type Field2F64 = Field2<f64>;
/// `f64` spectrum.
pub type Spectrum2F64 = Spectrum2<f64>;
/// `f64` dyadic partition.
pub type DyadicPartitionF64 = lp::DyadicPartition<f64>;
/// `f64` cutoff pair.
pub type CutoffPairF64 = cutoff::CutoffPair<f64>;
/// `f64` sheet sample.
pub type FbsSampleF64 = fbs::FbsSample<f64>;
/// `f64` Christoffel table.
pub type ChristoffelTableF64 = geometry::ChristoffelTable<f64>;
/// `f64` wave data.
pub type InitialDataF64 = wave::InitialData<f64>;
/// `f64` chart solution.
pub type LocalSolutionF64 = solver::LocalSolution<f64>;
