use std::io;

use thiserror::Error;

/// Largest lag (smaller lattice dimension) the forward recursion accepts.
pub const MAX_LAG: usize = 20;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported size: lag {lag} exceeds the maximum of {max}")]
    UnsupportedSize { lag: usize, max: usize },

    #[error("lattice of {sites} sites is too large for exhaustive enumeration (max {max})")]
    TooLargeForEnumeration { sites: usize, max: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The log-posterior was not finite at the initial value of a chain.
    #[error("initialization error: {0}")]
    Initialization(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
