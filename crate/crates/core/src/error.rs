//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Configuration rejected; names the offending field.
    #[error("invalid config: field `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    /// A numerical kernel failed (e.g. a covariance that lost its thermal
    /// floor and cannot be factorized).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Numerical failure inside a specific Monte Carlo drop.
    #[error("drop {drop_index}: {source}")]
    Drop {
        drop_index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    pub fn in_drop(self, drop_index: u64) -> Self {
        Error::Drop {
            drop_index,
            source: Box::new(self),
        }
    }
}
