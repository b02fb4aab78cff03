use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid home config: {0}")]
    InvalidConfig(String),
    #[error("action index {index} out of range for {actions} actions")]
    InvalidAction { index: usize, actions: usize },
    #[error("zone {zone} out of range for {zones} zones")]
    InvalidZone { zone: usize, zones: usize },
    #[error("state does not match config: {0}")]
    StateMismatch(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
