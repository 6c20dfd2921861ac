use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes or channel counts do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// A network, optimizer or training configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// Caller supplied an input that violates an operation's precondition.
    #[error("input error: {0}")]
    Input(String),
    /// API misuse such as calling backward on a non-scalar.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    /// A loss term became non-finite during training.
    #[error("non-finite loss at step {step}: {detail}")]
    Numeric { step: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line tool: 2 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! dim_err {
    ($($arg:tt)*) => { $crate::error::Error::Dimension(format!($($arg)*)) };
}
pub(crate) use dim_err;
