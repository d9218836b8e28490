//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by analysis, simulation, and policy construction.
#[derive(Debug, Clone, Error)]
pub enum SapError {
    /// An input violated a precondition (negative density, zero distance, ...).
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A numerical routine failed to converge or produced an invalid value.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A closed-form expression was evaluated outside its validity domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The primary-protection constraint cannot be met at any decoding target.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, SapError>;
