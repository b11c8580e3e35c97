use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("total dimension {dim} exceeds the dense cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integrator failed to reach tolerance: {0}")]
    Tolerance(String),
    #[error("truncation guard tripped: {0}")]
    TruncationGuard(String),
    #[error("invariant breached: {0}")]
    Invariant(String),
    #[error("unsupported operator: {0}")]
    Unsupported(String),
    #[error("no construction found: {0}")]
    NotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
