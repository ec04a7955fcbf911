//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A model definition violates one of the structural conditions
    /// (sign of the mean-reversion coefficient, missing moments, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature for {context} did not converge: {reason}")]
    Quadrature { context: String, reason: String },

    /// A run-configuration document could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// The requested mollifier level cannot be constructed because the
    /// cutoff sequence underflows before reaching it.
    #[error("mollifier level {requested} unreachable: a_k underflows; max achievable level is {max_achievable}")]
    MollifierRange {
        requested: usize,
        max_achievable: usize,
    },

    /// The operation is not defined for the supplied model variant.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn invalid_model(msg: impl Into<String>) -> Self {
        Error::InvalidModel(msg.into())
    }
}
