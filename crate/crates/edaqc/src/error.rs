//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violated an operation precondition.
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// A computed feature came out non-finite. `index` is the 1-based
    /// position in the canonical feature map.
    #[error("feature {index} ({name}) is non-finite")]
    Feature { index: usize, name: &'static str },

    /// A file did not match its expected schema.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn rejected(msg: impl Into<String>) -> Self {
        Error::RejectedInput(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
