use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("class `{class}` has {available} documents, {required} required")]
    InsufficientClass {
        class: String,
        available: usize,
        required: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty vocabulary after applying min_count {0}")]
    EmptyVocabulary(u64),

    #[error("corpus too small: {0}")]
    CorpusTooSmall(String),

    #[error("document `{0}` has no label")]
    Unlabeled(String),

    #[error("all tokens are out of vocabulary")]
    AllOutOfVocabulary,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("malformed model file: {0}")]
    Format(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
