//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter or configuration value is out of its domain.
    /// `name` identifies the offending quantity (config key or argument).
    #[error("invalid value for `{name}`: {reason}")]
    InvalidInput { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Allocation would exceed the configured memory budget.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A linear solve or eigensolve failed, or its residual test did not pass.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Steady-state null space is not one-dimensional.
    #[error("degenerate steady state: null-space dimension {dim} (tol {tol:.3e})")]
    DegenerateSteadyState { dim: usize, tol: f64 },

    /// Time integration broke down (step-size underflow, invariant violation).
    #[error("integration failure: {0}")]
    Integration(String),

    /// Requested state does not fit in the truncated Fock space.
    #[error("truncation insufficient: {0}")]
    Truncation(String),

    /// The linearized model has no decaying fluctuations (Gamma <= 0); the
    /// classical fixed point has lost its stability.
    #[error("effective model unstable: damping Gamma = {gamma:.6e} <= 0")]
    Unstable { gamma: f64 },

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
