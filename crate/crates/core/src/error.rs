use alloc::string::String;

/// Errors raised by the geometric and stochastic routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("operation not supported on {model}: {op}")]
    Unsupported { model: &'static str, op: &'static str },
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure at step {step}: {reason}")]
    Numerical { step: usize, reason: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
