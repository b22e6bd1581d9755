//! Error type shared by every module.
//!
//! Variants are grouped by how the CLI maps them to exit codes: bad
//! arguments (2), I/O failures (3), and numerical contract violations (4).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or shape; maps to exit code 2.
    #[error("invalid argument: {0}")]
    BadArgument(String),

    /// Underlying I/O failure; maps to exit code 3.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents (bad magic, truncated payload, non-finite
    /// values); maps to exit code 3.
    #[error("format error: {0}")]
    Format(String),

    /// A numerical contract was violated at run time (support escaping the
    /// detector disk, odd direction weights, degenerate geometry, rejected
    /// fits); maps to exit code 4.
    #[error("numerical contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub fn bad_argument(msg: impl Into<String>) -> Self {
        Error::BadArgument(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BadArgument(_) => 2,
            Error::Io(_) | Error::Format(_) => 3,
            Error::Contract(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
