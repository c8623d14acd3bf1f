use std::path::PathBuf;

/// Errors produced by the labeling pipeline and its stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input document (subtitle, pose file, ...), with the
    /// 1-based line number where parsing failed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Bad invocation: unknown format tag, missing argument, ...
    #[error("usage error: {0}")]
    Usage(String),

    /// Invalid configuration (lexicon file, pipeline config, corpus).
    #[error("config error: {0}")]
    Config(String),

    /// Input data violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A referenced path does not exist or cannot be read.
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
