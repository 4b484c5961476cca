//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched dimensionality between arguments.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A configuration value violates a declared constraint.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Numerical failure (non-finite values, factorization breakdown).
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Training loss became non-finite; the trace up to this point is
    /// preserved by the caller-owned trace log.
    #[error("training diverged at iteration {iteration}: {term} is non-finite")]
    Diverged { iteration: u64, term: &'static str },

    /// A malformed row in a columnar data file.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("failed to parse config: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Exit code contract: 0 success, 1 usage/config error, 2 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::Diverged { .. } => 2,
            _ => 1,
        }
    }
}
