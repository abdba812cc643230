use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error class, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("semantic error: {0}")]
    Semantic(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("stage order violation: {0}")]
    StageOrderViolation(String),
    #[error("ingest missing: {0}")]
    IngestMissing(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invalid k = {k} for {len} frames")]
    InvalidK { k: usize, len: usize },
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("bad magic in {}", .0.display())]
    BadMagic(PathBuf),
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("unsupported format version {found:?} (expected {expected:?})")]
    UnsupportedVersion { expected: String, found: String },
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec error on {}: {message}", .path.display())]
    Image { path: PathBuf, message: String },
    #[error("malformed json in {}: {source}", .path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } | Error::MissingFile(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}
