use thiserror::Error;

use crate::rescale::ScalingTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("{solver} did not converge in {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("smart scaling exceeded its cap of {cap} iterations")]
    IterationLimitExceeded { cap: usize, trace: Box<ScalingTrace> },

    #[error("empirical covariance has an empty kernel (m = {m}, n = {n})")]
    RankDegenerate { m: usize, n: usize },

    #[error("conditional variance is numerically zero")]
    DegenerateConditional,

    #[error("coordinate {coordinate}: {source}")]
    Coordinate {
        coordinate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed input at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
