use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad command line or configuration value.
    #[error("{0}")]
    Config(String),

    /// Missing or malformed input data.
    #[error("{0}")]
    Data(String),

    #[error("parse error in {file} at line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Core(#[from] ccl_core::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        HarnessError::Data(msg.into())
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }

    /// 1 usage/config, 2 data/format, 3 unsupported size.
    pub fn exit_code(&self) -> i32 {
        use ccl_core::Error as C;
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Data(_) | HarnessError::Parse { .. } | HarnessError::Io { .. } => 2,
            HarnessError::UnsupportedSize(_) => 3,
            HarnessError::Core(e) => match e {
                C::UnsupportedSize { .. } | C::TooLargeForEnumeration { .. } => 3,
                C::Domain(_) => 1,
                C::Parse { .. } | C::Io(_) | C::Initialization(_) => 2,
            },
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
