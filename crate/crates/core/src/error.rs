use std::path::PathBuf;

/// Errors raised by the library.
///
/// `Input` covers anything the caller can fix (bad files, mismatched
/// shapes, invalid parameters). `Contract` means an internal invariant was
/// violated and indicates a bug rather than bad data.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Input(String),

    #[error("{path}: line {line}, column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by internal invariant violations.
    pub fn is_contract(&self) -> bool {
        matches!(self, Error::Contract(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
