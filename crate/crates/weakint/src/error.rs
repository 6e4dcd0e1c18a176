//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition (bad index, bad delta, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An exact-enumeration operation would exceed the evaluation budget.
    #[error("enumeration budget exceeded: {required} evaluations required, budget {budget}; {hint}")]
    BudgetExceeded {
        required: u128,
        budget: u64,
        hint: String,
    },

    /// A numerical procedure failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An experiment configuration could not be resolved.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
