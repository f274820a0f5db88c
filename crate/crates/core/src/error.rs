use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("document is empty")]
    EmptyDocument,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("vector {id} is not unit norm (norm = {norm})")]
    NotUnitNorm { id: String, norm: f64 },

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("corrupt index {path}: {reason}")]
    CorruptIndex { path: PathBuf, reason: String },

    #[error("prompt needs {needed} tokens but the budget is {budget}")]
    BudgetExhausted { needed: usize, budget: usize },

    #[error("could not parse model output: {0}")]
    ParseFailure(String),

    #[error("no candidate markers available")]
    EmptyCandidateSet,

    #[error("input still contains immunohistochemistry content: {0}")]
    UnmaskedInput(String),

    #[error("invalid case {case_id}: {reason}")]
    InvalidCase { case_id: String, reason: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { context: context.into(), source }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::CorruptIndex { path: path.into(), reason: reason.into() }
    }
}
