use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Malformed input file; `line` is 1-based.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Numerical(#[from] epl_core::Error),

    #[error("{0}")]
    Summary(String),
}

impl HarnessError {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        HarnessError::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for failures inside the numerical core, 1 for
    /// everything attributable to the invocation or its input files.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numerical(epl_core::Error::InvalidInput(_))
            | HarnessError::Numerical(epl_core::Error::DimensionMismatch { .. })
            | HarnessError::Numerical(epl_core::Error::TooLarge { .. }) => 1,
            HarnessError::Numerical(_) => 2,
            _ => 1,
        }
    }
}
