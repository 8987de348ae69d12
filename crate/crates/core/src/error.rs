use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition does not hold.
    #[error("domain error: {0}")]
    Domain(String),
    /// Bad or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// An iterative solve did not reach its tolerance.
    #[error("numeric error: {what} (residual {residual:.3e})")]
    Numeric { what: String, residual: f64 },
    /// A memory, time or step budget would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),
    /// Not enough events to form an estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// A cached or logged file failed validation.
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
