use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("degenerate obstacle rectangle (zero area)")]
    DegenerateRectangle,

    #[error("joint action does not match live agents: {0}")]
    ActionMismatch(String),

    #[error("scenario generation failed: {0}")]
    Infeasible(String),

    #[error("checkpoint incompatible: {0}")]
    CheckpointMismatch(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed scenario file: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("scenario serialization failed: {0}")]
    TomlEmit(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
