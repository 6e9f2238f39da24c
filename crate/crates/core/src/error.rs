use thiserror::Error;

use crate::lattice::LatticeIndex;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("dimension mismatch: expected d={expected}, got d={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("truncation escape: state {state} leaves the truncated space under t={t}")]
    TruncationEscape { t: LatticeIndex, state: String },

    #[error("invalid state space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("support deficiency: test function vanishes on {count} state(s), first {first}")]
    SupportDeficiency { count: usize, first: String },

    #[error("inconclusive states present ({0}); cannot split the family")]
    InconclusiveStates(usize),

    #[error("invariance violation: {0}")]
    InvarianceViolation(String),

    #[error("operation not supported by this model: {0}")]
    Unsupported(String),

    #[error("missing lattice value at {0}")]
    MissingValue(LatticeIndex),

    #[error("unknown example `{0}`")]
    UnknownExample(String),
}

pub type Result<T> = std::result::Result<T, FieldError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FieldError {
    FieldError::InvalidParameter { name, reason: reason.into() }
}
