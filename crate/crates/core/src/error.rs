use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rule config line {line}: {message}")]
    RuleSyntax { line: usize, message: String },

    #[error("rule config line {line}: unknown slot `{name}`")]
    UnknownSlot { line: usize, name: String },

    #[error("unknown slot `{0}`")]
    UnknownSlotName(String),

    #[error("rating {0} is outside 1..=10")]
    InvalidRating(String),

    #[error("training set is empty")]
    EmptyTraining,

    #[error("smoothing parameter must be positive and finite, got {0}")]
    InvalidSmoothing(f64),

    #[error("token `{token}` is not in the {slot} vocabulary")]
    OutOfVocabulary { slot: String, token: String },

    #[error("book `{0}` not found")]
    NotFound(String),

    #[error("duplicate book id `{0}`")]
    DuplicateId(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Serde(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
