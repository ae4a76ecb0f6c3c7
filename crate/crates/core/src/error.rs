use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A vector whose norm is too small for a cosine to be defined.
    #[error("degenerate (near-zero norm) vector{}", .index.map(|i| format!(" at index {i}")).unwrap_or_default())]
    DegenerateVector { index: Option<usize> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema error on line {line}: {message}")]
    Schema { line: u64, message: String },

    #[error("idx format error in {}: {message}", .path.display())]
    Idx { path: PathBuf, message: String },

    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn degenerate(index: usize) -> Self {
        Error::DegenerateVector { index: Some(index) }
    }
}
