//! Minimal dense-network engine: batched forward/backward passes in double
//! precision, Adam, the squashed-Gaussian policy head, and checkpoint files.

mod adam;
mod checkpoint;
mod gaussian;
mod mlp;

pub use adam::{AdamState, ScalarAdam, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use gaussian::{
    deterministic_action, head_from_output, head_gradients, log_prob_of_action, sample_action,
    GaussianHead, HeadGrads, SampleInfo, ACTION_DIM, LOG_STD_MAX, LOG_STD_MIN,
};
pub use mlp::{ForwardCache, Mlp, MlpGrads};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("stale forward cache: {0}")]
    StaleCache(String),
    #[error("shape mismatch between parameters and {0}")]
    ShapeMismatch(String),
    #[error("non-finite parameter encountered while saving checkpoint")]
    NonFiniteParameter,
    #[error("checkpoint checksum mismatch: expected {expected}, computed {computed}")]
    ChecksumMismatch { expected: String, computed: String },
    #[error("unsupported checkpoint format version {0}")]
    UnsupportedFormatVersion(u32),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
