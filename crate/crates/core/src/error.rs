use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped so callers (notably the CLI) can map them onto
/// coarse failure classes: configuration problems, data validation
/// problems, and numeric failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid relation set: {0}")]
    RelationSet(String),

    #[error("overlapping entities: {0}")]
    OverlappingEntities(String),

    #[error("invalid sentence: {0}")]
    Sentence(String),

    #[error("malformed tag `{tag}`: {reason}")]
    TagParse { tag: String, reason: String },

    #[error("corpus error at line {line}: {reason}")]
    Corpus { line: usize, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input data (as opposed to bad
    /// configuration or numeric failure).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::RelationSet(_)
                | Error::OverlappingEntities(_)
                | Error::Sentence(_)
                | Error::TagParse { .. }
                | Error::Corpus { .. }
                | Error::Checkpoint(_)
        )
    }

    /// True for numeric failures (non-finite losses or gradients).
    pub fn is_numeric_error(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
