use std::path::PathBuf;

/// Broad failure category, used by callers to pick an exit code or
/// retry strategy without matching on every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input from the caller: malformed identifiers, out-of-range
    /// parameters, inconsistent configuration.
    Validation,
    /// The remote side (or its replay stand-in) failed.
    Network,
    /// Stored data that should be consistent is not: schema mismatches,
    /// duplicate records, references to unknown papers.
    Integrity,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid arXiv identifier {raw:?}: {reason}")]
    InvalidArxivId { raw: String, reason: String },

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Network(String),

    #[error("{0}")]
    Integrity(String),

    #[error("feed parse error at byte {offset}: {message}")]
    FeedParse { offset: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path} line {line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArxivId { .. } | Error::Validation(_) => ErrorKind::Validation,
            Error::Network(_) => ErrorKind::Network,
            Error::Integrity(_) | Error::FeedParse { .. } | Error::Io { .. } | Error::Record { .. } => {
                ErrorKind::Integrity
            }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn record(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Record {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
