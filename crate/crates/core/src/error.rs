use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("feature {feature} repeats along path \"{path}\"")]
    RepeatedSplit { path: String, feature: usize },
    #[error("distribution not normalized (sum = {0})")]
    Unnormalized(f64),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("inconsistent width: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
