use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid action: agent {agent} action {action} out of range (|A_{agent}| = {limit})")]
    InvalidAction {
        agent: usize,
        action: usize,
        limit: usize,
    },

    #[error("uninitialized belief: zero count sum for agent {agent}")]
    UninitializedBelief { agent: usize },

    #[error("impossible observation: outcome {outcome} has zero likelihood under the model")]
    ImpossibleObservation { outcome: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
