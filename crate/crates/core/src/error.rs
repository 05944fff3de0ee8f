use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arguments outside the documented domain of an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A characteristic whose defining ratio has a zero denominator.
    #[error("undefined characteristic: {0}")]
    Undefined(String),

    /// Observed counts on an outcome the model assigns zero probability.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Counts and model disagree in shape or settings.
    #[error("model/data mismatch: {0}")]
    Mismatch(String),

    /// The optimizer exhausted its iteration budget on every start.
    #[error("not converged: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn undefined(msg: impl Into<String>) -> Error {
    Error::Undefined(msg.into())
}
