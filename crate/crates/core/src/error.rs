use thiserror::Error;

/// Errors raised by the filtering and experiment code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlafError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input sample {value} at index {index} is outside [-1, 1]")]
    Domain { index: usize, value: f64 },
    #[error("length mismatch: got {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, FlafError>;

pub(crate) fn config_err(msg: impl Into<String>) -> FlafError {
    FlafError::Config(msg.into())
}
