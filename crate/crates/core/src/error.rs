use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("corrupt data at byte offset {offset}: {reason}")]
    Corrupt { offset: usize, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("wav {chunk} chunk: {reason}")]
    Wav { chunk: String, reason: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn corrupt(offset: usize, reason: impl Into<String>) -> Self {
        Error::Corrupt {
            offset,
            reason: reason.into(),
        }
    }

    pub(crate) fn wav(chunk: &str, reason: impl Into<String>) -> Self {
        Error::Wav {
            chunk: chunk.to_string(),
            reason: reason.into(),
        }
    }
}
