//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("eigensolver failed to converge after {0} sweeps")]
    EigNoConvergence(usize),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
