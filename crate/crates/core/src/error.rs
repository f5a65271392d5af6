//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by the numerical core.
///
/// Variants are grouped by failure class so the CLI can map them onto
/// distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid constraints violated (N not a power of two, L too small, ...).
    #[error("invalid grid: {0}")]
    Grid(String),

    /// Configuration rejected during validation (schema or value range).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A parameter left the regime in which an operation is defined
    /// (e.g. Young summation with a Hurst index <= 1/2).
    #[error("parameter outside admissible regime: {0}")]
    Regime(String),

    /// Axis covariance not numerically positive definite even after the
    /// one-shot jitter retry.
    #[error("Cholesky factorization failed on axis {axis} (H = {hurst}): {detail}")]
    Cholesky {
        axis: &'static str,
        hurst: f64,
        detail: String,
    },

    /// Ensemble statistics requested with too few replicates.
    #[error("ensemble of {got} replicates is below the minimum of {min}")]
    EnsembleTooSmall { got: usize, min: usize },

    /// A degenerate input was rejected (zero field in a ratio, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Evaluation requested outside the sampled window.
    #[error("evaluation outside the sampled window: {0}")]
    OutOfWindow(String),

    /// Picard iteration failed to contract.
    #[error(
        "Picard iteration diverged after {iterations} iterations \
         (last contraction factor {last_factor})"
    )]
    Diverged { iterations: usize, last_factor: f64 },

    /// The scaling search exceeded its cap without reaching contraction.
    #[error("lambda search exceeded cap {cap} (last contraction factor {last_factor})")]
    LambdaCap { cap: f64, last_factor: f64 },

    /// Gluing windows do not overlap.
    #[error("gluing failed: {0}")]
    Glue(String),

    /// Filesystem or serialization failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
