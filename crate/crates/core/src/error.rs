use thiserror::Error;

/// Errors raised by the capflow numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate triple: two points coincide")]
    DegenerateTriple,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("kernel evaluated at the origin")]
    SingularPoint,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric inconsistency: {0}")]
    NumericInconsistency(String),

    #[error("resource guard: {what} needs {requested} points, limit is {limit}")]
    ResourceLimit {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
