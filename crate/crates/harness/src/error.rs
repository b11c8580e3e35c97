use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant breached: {0}")]
    Invariant(String),
    #[error("truncation guard tripped: {0}")]
    Truncation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Invariant(_) | HarnessError::Numeric(_) => 3,
            HarnessError::Truncation(_) => 4,
            HarnessError::Io(_) | HarnessError::Csv(_) => 1,
        }
    }
}

impl From<qdyn_core::Error> for HarnessError {
    fn from(e: qdyn_core::Error) -> Self {
        use qdyn_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::DimensionCap { .. } => HarnessError::Config(e.to_string()),
            E::TruncationGuard(m) => HarnessError::Truncation(m),
            E::Invariant(m) => HarnessError::Invariant(m),
            _ => HarnessError::Numeric(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
