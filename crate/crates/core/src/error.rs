use thiserror::Error;

/// Errors raised by the sequence, channel, detector and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates the documented precondition of an operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
