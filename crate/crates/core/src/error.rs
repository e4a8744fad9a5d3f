use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("Gram matrix is numerically singular")]
    Singular,

    #[error("element {index} out of range for ground set of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("set is not independent in the matroid")]
    NotIndependent,

    #[error("set is not a basis of the matroid")]
    NotBasis,

    #[error("invalid matroid: {0}")]
    InvalidMatroid(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix order {order} exceeds cap {cap}")]
    OrderTooLarge { order: usize, cap: usize },

    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("no basis of the matroid spans the space")]
    NoSpanningBasis,

    #[error("graph disconnected")]
    Disconnected,

    #[error("postcondition violated: {0}")]
    Postcondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
