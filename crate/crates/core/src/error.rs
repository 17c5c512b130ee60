//! Error type shared across the crate.

use thiserror::Error;

/// Errors surfaced by model, schedule, accounting and experiment operations.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The probe protocol was violated (schedule dried up mid-search,
    /// mismatched library size, malformed transcript, ...).
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// A scripted schedule ran out of entries before the demand was met.
    #[error("script exhausted: needed {needed} candidates, {available} left")]
    ScriptExhausted { needed: u64, available: u64 },

    /// The request exceeds what this build will enumerate or materialize.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The operation is not defined for the given schedule kind.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("serialization error: {0}")]
    Serialize(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
