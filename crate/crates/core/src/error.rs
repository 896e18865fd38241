use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("list length {list_len} exceeds the number of items {num_items}")]
    ListTooLong { list_len: usize, num_items: usize },

    #[error("item {0} appears more than once in the ranked list")]
    DuplicateItem(usize),

    #[error("item {item} is out of range for {num_items} items")]
    ItemOutOfRange { item: usize, num_items: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank-one weight must be nonnegative, got {0}")]
    NegativeWeight(f64),

    #[error("quantile level {0} is outside (0, 1)")]
    InvalidQuantile(f64),

    #[error("misspecification shift {0} is outside [0, 8]")]
    ShiftOutOfRange(u32),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("policy requires a per-item feature context")]
    MissingContext,

    #[error("IRLS did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    IrlsNotConverged { iterations: usize, grad_norm: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
