//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: validation errors map to 2.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
