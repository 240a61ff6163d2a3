//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ellipticity violation: {0}")]
    EllipticityViolation(String),

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("boundary basis rank deficiency: {0}")]
    BasisRank(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank/conditioning failure: {0}")]
    Rank(String),

    #[error("degenerate pair: {0}")]
    DegeneratePair(String),

    #[error("estimation did not converge: {0}")]
    Estimation(String),
}

pub type Result<V> = std::result::Result<V, Error>;
