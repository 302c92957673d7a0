use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation. `key` is the config/file key name.
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("invalid reference path: {0}")]
    InvalidPath(String),

    #[error("invalid obstacle footprint: {0}")]
    InvalidFootprint(String),

    #[error("non-finite cost in rollout {rollout}")]
    NonFiniteCost { rollout: usize },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
