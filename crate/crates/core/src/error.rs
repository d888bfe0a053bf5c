//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by simulation, training, detection, and file handling.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Array dimensions do not line up (wrong network for a grid, etc.).
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A numeric operation left its domain (non-PSD covariance, singular
    /// matrix, non-finite intermediate).
    #[error("numeric domain error: {0}")]
    Numeric(String),

    /// A container file is malformed; `offset` is the byte position of the
    /// first unreadable or inconsistent field.
    #[error("format error at byte {offset} ({section}): {message}")]
    Format {
        offset: u64,
        section: &'static str,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
