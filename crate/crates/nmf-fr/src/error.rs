use std::path::PathBuf;

use nmf_fr_core::StageError;

/// Errors surfaced by the CLI layer. Every variant carries enough context to
/// print a one-line diagnostic naming the failing stage or file.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("stage load_corpus: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("stage load_corpus: {path}:{line}: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error("{0}")]
    Core(#[from] nmf_fr_core::Error),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    BadFile { path: PathBuf, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("determinism check failed: run {run} differs from run 0")]
    DeterminismViolation { run: usize },
}

pub type AppResult<T> = Result<T, AppError>;
