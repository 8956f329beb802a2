//! Crate-wide error type. Shape and argument problems in the public API are
//! reported through this instead of panicking, so the CLI can turn them into
//! readable messages.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A vector or matrix had the wrong length for the operation.
    DimMismatch { what: &'static str, expected: usize, got: usize },
    /// An argument was outside its valid range (non-positive sigma, zero dim, ...).
    InvalidParam(String),
    /// A serialized checkpoint or data file was malformed.
    Format(String),
    /// A text input (CSV row, story file line) failed to parse.
    Parse { line: usize, msg: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimMismatch { what, expected, got } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, got {got}")
            }
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Format(msg) => write!(f, "bad format: {msg}"),
            Error::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
