use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in `{field}` at step {step}")]
    NonFinite { field: &'static str, step: u64 },
    #[error("singular banded system in Fourier mode {mode}")]
    SingularMode { mode: usize },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("config: {0}")]
    Config(String),
    #[error("snapshot format: {0}")]
    SnapshotFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
