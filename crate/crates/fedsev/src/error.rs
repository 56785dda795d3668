//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the CLI: configuration problems exit 2,
    /// everything else exits 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }

    /// Prefix the message while keeping the error category.
    pub fn with_context(self, prefix: &str) -> Error {
        match self {
            Error::Io(e) => Error::Data(format!("{prefix}: {e}")),
            Error::Csv(m) => Error::Csv(format!("{prefix}: {m}")),
            Error::Data(m) => Error::Data(format!("{prefix}: {m}")),
            Error::Config(m) => Error::Config(format!("{prefix}: {m}")),
            Error::Shape(m) => Error::Shape(format!("{prefix}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{prefix}: {m}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
