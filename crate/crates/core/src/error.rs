use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: dimension mismatch (expected {expected} coordinates, found {found})")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: coordinate {value} outside [0,1)")]
    Range { line: usize, value: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("guard exceeded: {0}")]
    Guard(String),

    #[error("horizon too large: {reason} (largest feasible horizon is {max_horizon})")]
    HorizonTooLarge { reason: String, max_horizon: usize },

    #[error("no admissible schedule index: {0}")]
    EmptySchedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Guard,
    Computation,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_)
            | Error::Parse { .. }
            | Error::DimensionMismatch { .. }
            | Error::Range { .. }
            | Error::Domain(_) => ErrorClass::Validation,
            Error::Guard(_) | Error::HorizonTooLarge { .. } => ErrorClass::Guard,
            Error::OutOfRange(_) | Error::EmptySchedule(_) => ErrorClass::Computation,
            Error::Io(_) => ErrorClass::Io,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
