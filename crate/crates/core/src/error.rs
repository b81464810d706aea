//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Errors reported by core operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Invalid configuration value (bad layer sizes, incompatible
    /// algorithm/channel combination, out-of-range probability ...).
    Config(String),
    /// Dimension mismatch between tensors, observations, or traces.
    Shape(String),
    /// Out-of-range index or otherwise invalid call argument.
    Argument(String),
    /// Non-finite value where a finite one is required (NaN gradient,
    /// diverged parameter).
    Numeric(String),
    /// Degenerate input with no meaningful result (e.g. normalizing a
    /// zero vector).
    Degenerate(String),
    /// Malformed checkpoint or codebook text.
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Argument(msg) => write!(f, "argument error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
