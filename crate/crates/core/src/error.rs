use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by parameter validation and misuse of stateful mechanisms.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// A parameter is outside its admissible range.
    Parameter(String),
    /// A stateful object was used out of protocol (query after halt, past horizon, ...).
    Usage(String),
    /// Malformed loss-matrix text.
    Parse { row: usize, column: usize, message: String },
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Parse { row, column, message } => {
                write!(f, "parse error at row {row}, column {column}: {message}")
            }
        }
    }
}

impl core::error::Error for Error {}
