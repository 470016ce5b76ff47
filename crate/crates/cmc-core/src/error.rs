//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors surfaced by the exact and numeric algebra layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    /// An operand was expected to be weight-homogeneous (or of a specific
    /// ρ-weight) and was not.
    #[error("weight error: {0}")]
    Weight(String),

    /// A requested coefficient or operation lies outside the exactness
    /// window of a loop-algebra element.
    #[error("window error: {0}")]
    Window(String),

    /// Division by an element that is not a unit of the coefficient ring.
    #[error("non-unit divisor: {0}")]
    NonUnitDivisor(String),

    /// An index (tower order, flow index, λ-degree, …) outside the valid range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// Malformed or inconsistent input data (CLI parameters, JSON payloads).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An internal invariant was violated; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CoreError {
    pub fn weight(msg: impl Into<String>) -> Self {
        CoreError::Weight(msg.into())
    }
    pub fn window(msg: impl Into<String>) -> Self {
        CoreError::Window(msg.into())
    }
    pub fn index(msg: impl Into<String>) -> Self {
        CoreError::IndexOutOfRange(msg.into())
    }
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidInput(msg.into())
    }
    pub fn internal(msg: impl Into<String>) -> Self {
        CoreError::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
