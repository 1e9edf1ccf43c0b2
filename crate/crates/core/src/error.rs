use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("configuration must contain at least one token with at least one coordinate")]
    EmptyConfiguration,
    #[error("row {row} has {found} coordinates, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite state entry at token {row}, coordinate {col}")]
    NonFinite { row: usize, col: usize },
    #[error("token index {index} out of range for {n} tokens")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("geometric diagnostics require d = 2, got d = {0}")]
    UnsupportedDimension(usize),
    #[error("matrix at step {time} is not row-stochastic (row {row}: {detail})")]
    NonStochastic {
        time: u64,
        row: usize,
        detail: String,
    },
    #[error("empty point set")]
    EmptyInput,
    #[error("zero-length edge")]
    ZeroLengthEdge,
    #[error("zero vector where a nonzero one is required")]
    ZeroVector,
    #[error("window [{start}, {end}] is empty or outside the trajectory (last step {last})")]
    EmptyWindow {
        start: usize,
        end: usize,
        last: usize,
    },
    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("non-finite result while stepping token {row}")]
    NonFiniteResult { row: usize },
    #[error("operation requires {0}")]
    WrongDynamics(&'static str),
    #[error("trajectory does not retain {0}")]
    MissingRetained(&'static str),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> CoreError {
    CoreError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
