use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} out of range: {value} (allowed {allowed})")]
    OutOfRange {
        what: &'static str,
        value: String,
        allowed: &'static str,
    },
    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter {what}: {reason}")]
    InvalidParameter { what: &'static str, reason: String },
    #[error("grid is not uniform: {0}")]
    NonUniformGrid(String),
    #[error("reference signal is identically zero; relative error undefined")]
    ZeroReference,
    #[error("scheme mismatch: expected {expected}, got {got}")]
    SchemeMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("integer overflow while inverting shuffling matrix of order {0}")]
    Overflow(usize),
    #[error("fit did not converge: {0}")]
    FitFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(
    what: &'static str,
    value: impl ToString,
    allowed: &'static str,
) -> Error {
    Error::OutOfRange {
        what,
        value: value.to_string(),
        allowed,
    }
}

pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        what,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            got,
        })
    }
}
