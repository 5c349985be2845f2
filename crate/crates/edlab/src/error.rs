use thiserror::Error;

/// Errors raised by the library. `Usage` maps to CLI exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("non-finite integrand value at sample {index}")]
    NonFinite { index: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_) | Error::Invalid(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
