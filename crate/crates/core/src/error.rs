//! Error type shared by all solver components.

use thiserror::Error;

/// Errors produced by the sparse kernels, compression operators, and the
/// iteration/estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Sampling budget too small for the problem: a projected matrix became
    /// (near-)singular and eigenvalue extraction is not possible. Carries the
    /// singular-value diagnostic so the failure is inspectable.
    #[error("insufficient sampling: {context} (sigma_min = {sigma_min:.3e}, sigma_max = {sigma_max:.3e})")]
    InsufficientSampling {
        context: String,
        sigma_min: f64,
        sigma_max: f64,
    },

    /// An iterate column lost all weight; the trajectory cannot continue.
    #[error("dead column {column} at iteration {iteration}: zero one-norm")]
    DeadColumn { column: usize, iteration: usize },

    #[error("rank-deficient trial subspace: {0}")]
    RankDeficientTrial(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("trajectory log: {0}")]
    TrajectoryLog(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
