use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The split matters to callers: `Domain`/`Contract` signal misuse of an
/// operation (bad arguments, violated preconditions), while `Numerical`
/// signals that a computation could not be completed to tolerance
/// (incomplete spectrum, stalled inversion).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A cross-argument precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The computation failed to reach the requested tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Not enough data to evaluate the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }
}
