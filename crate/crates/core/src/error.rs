use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("numeric failure in {what} after {iterations} iterations")]
    NumericFailure { what: String, iterations: usize },

    #[error("rank deficient: requested rank {requested}, numerical rank {available}")]
    RankDeficient { requested: usize, available: usize },

    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),

    #[error("ingestion error at byte offset {offset}: {message}")]
    Ingest { offset: u64, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericFailure { .. } | Error::RankDeficient { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
