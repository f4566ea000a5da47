//! Error type shared by the whole crate.

/// Errors produced by the symbolic and numeric layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("empty truncation: cutoff {cutoff} exceeds window top {hi}")]
    EmptyTruncation { cutoff: i64, hi: i64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn parse(pos: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            pos,
            message: message.into(),
        }
    }

    /// Exit-code class used by front ends: validation-style errors vs
    /// numeric failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::Degenerate(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
