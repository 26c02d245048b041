use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("invalid solver state: {0}")]
    InvalidState(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("action index {index} out of range (action space has {size} actions)")]
    ActionOutOfRange { index: usize, size: usize },

    #[error("failed to parse expert answer: {0}")]
    Parse(String),

    #[error("expert provider: {0}")]
    Provider(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
