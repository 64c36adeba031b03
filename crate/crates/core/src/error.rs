use std::fmt;

use thiserror::Error;

/// What went wrong with a single table row.
#[derive(Debug, Clone, PartialEq)]
pub enum RowFault {
    /// Row has the wrong number of entries.
    Width { expected: usize, found: usize },
    /// Entry is NaN or infinite.
    NonFinite { state: usize },
    /// Entry is below zero.
    Negative { state: usize, value: f64 },
    /// Entry is above one.
    AboveOne { state: usize, value: f64 },
    /// Entries do not sum to one within tolerance.
    RowSum { sum: f64 },
    /// A deterministic row is not one-hot.
    NotOneHot,
}

impl fmt::Display for RowFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowFault::Width { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            RowFault::NonFinite { state } => write!(f, "entry {state} is not finite"),
            RowFault::Negative { state, value } => {
                write!(f, "entry {state} is negative ({value})")
            }
            RowFault::AboveOne { state, value } => {
                write!(f, "entry {state} exceeds one ({value})")
            }
            RowFault::RowSum { sum } => write!(f, "row sums to {sum}, not 1"),
            RowFault::NotOneHot => write!(f, "row is not one-hot"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A table row failed validation. `row` is the 1-based neighborhood index.
    #[error("invalid row {row}: {fault}")]
    InvalidRow { row: usize, fault: RowFault },

    /// Structural validation failure (shape, lengths, parameters).
    #[error("validation error: {0}")]
    Validation(String),

    /// The operation is not defined for this number of states or radius.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Broken internal invariant.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::InvalidRow { .. }
                | Error::Validation(_)
                | Error::Unsupported(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
