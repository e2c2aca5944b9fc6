//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by dataset ingestion, model evaluation, training and
/// artifact persistence.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A JSONL record violates the corpus schema.
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    /// A record parsed but carries an unusable label.
    #[error("rejected record at line {line}: {message}")]
    Rejected { line: usize, message: String },

    /// Invalid configuration or an empty/otherwise unusable training set.
    #[error("configuration error: {0}")]
    Config(String),

    /// Feature vector and parameter shapes disagree.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// Incompatible parameter shapes in composition.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A rollout group is too small for relative advantages.
    #[error("group size {0} too small, need at least 2 rewards")]
    GroupSize(usize),

    /// Invalid input to a metric or audit operation.
    #[error("invalid input: {0}")]
    Input(String),

    /// Training produced non-finite parameters or loss.
    #[error("training diverged: {0}")]
    Diverged(String),

    /// A persisted artifact has the wrong schema version or kind.
    #[error("incompatible artifact: {0}")]
    Incompatible(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
