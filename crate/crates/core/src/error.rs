use std::path::PathBuf;

/// Errors produced by analysis, metrics and file handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("unstable synthesis filter: output magnitude exceeded {limit:e} at sample {index}")]
    Unstable { index: usize, limit: f64 },

    #[error("frame cannot be analyzed: {0}")]
    Unanalyzable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("wav")]
    Wav(#[from] hound::Error),

    #[error("json")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
