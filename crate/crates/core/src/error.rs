use std::path::PathBuf;

/// Errors reported by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside its documented domain.
    #[error("{0}")]
    Domain(String),

    /// A configuration field failed validation.
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    /// A buffer is too short for the requested operation.
    #[error("insufficient samples for {what}: expected at least {expected}, found {actual}")]
    InsufficientSamples {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An input file does not match its declared layout.
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
