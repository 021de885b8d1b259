use alloc::string::String;
use core::fmt;

/// Errors surfaced by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on the inputs was violated.
    InvalidArgument(String),
    /// The operation would need dense N x N storage above the configured cap.
    ResourceLimit(String),
    /// Training produced a non-finite loss; carries the last finite epoch.
    Divergence { last_finite_epoch: Option<usize> },
    /// A generative recursion produced non-finite values.
    Internal(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ResourceLimit(msg) => write!(f, "resource limit: {msg}"),
            Error::Divergence { last_finite_epoch } => match last_finite_epoch {
                Some(e) => write!(f, "training diverged; last finite epoch {e}"),
                None => write!(f, "training diverged before the first finite epoch"),
            },
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
