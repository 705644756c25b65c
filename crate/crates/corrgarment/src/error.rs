//! Crate-wide error type.

/// Errors surfaced by generation, simulation, rendering, training and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid garment spec: {0}")]
    InvalidSpec(String),

    #[error("mesh resolution out of range: {vertices} vertices (allowed {min}..={max})")]
    ResolutionOutOfRange {
        vertices: usize,
        min: usize,
        max: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("no visible vertices under the camera")]
    NothingVisible,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset too small: {0}")]
    DatasetTooSmall(String),

    #[error("training diverged at batch {batch}: {detail}")]
    Diverged { batch: usize, detail: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
