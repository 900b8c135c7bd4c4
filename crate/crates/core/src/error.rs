use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid construction parameters or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A value left the finite range during evaluation.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Arguments outside a formula's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The request violates a hypothesis of the computation (growth, moments, means).
    #[error("rejected: {0}")]
    Rejected(String),
    /// A simulation component broke one of its contracts at run time.
    #[error("invariant breach: {0}")]
    InvariantBreach(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
