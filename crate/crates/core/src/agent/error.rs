use thiserror::Error;

use crate::home::SimError;
use crate::ternary::QuantError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid agent config: {0}")]
    InvalidConfig(String),
    #[error("feature vector has dimension {actual}, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cannot sample {requested} transitions from a buffer holding {size}")]
    EmptyBuffer { requested: usize, size: usize },
    #[error("non-finite loss {loss} at update {update}")]
    NonFiniteLoss { update: u64, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
