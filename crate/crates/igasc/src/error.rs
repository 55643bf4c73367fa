//! Error types shared across the crate.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters violate stationarity constraints.
    #[error("non-stationary parameters: {0}")]
    NonStationary(String),

    /// An observation is invalid for the chosen family.
    #[error("invalid observation at index {index}: {reason}")]
    InvalidObservation { index: usize, reason: String },

    /// Caller misuse (wrong lengths, empty input, bad configuration).
    #[error("usage error: {0}")]
    Usage(String),

    /// Every replication of a Monte Carlo study failed.
    #[error("monte carlo study failed: no replication converged")]
    StudyFailed,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn non_stationary(msg: impl Into<String>) -> Self {
        Error::NonStationary(msg.into())
    }
}
