use crate::metric::PointId;

/// Errors produced by the clustering structures and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need {needed}, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("point {0} is already present")]
    Duplicate(PointId),

    #[error("point {0} not found")]
    NotFound(PointId),

    #[error("invalid state: {0}")]
    State(String),

    #[error("clustering feature underflow: {0}")]
    Underflow(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that signal a broken internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::State(_) | Error::Underflow(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
