//! The SACER agent: twin-Q soft actor-critic with episode-replay reward
//! finalization, plus the SACER-V and behavior-cloning baselines.

mod bc;
mod ensemble;
mod rollout;
mod trainer;
mod transition;

pub use bc::{build_bc_dataset, train_bc, BcDataset, BcLogRow};
pub use ensemble::{
    alpha_loss, policy_loss, policy_loss_value, q_loss, q_loss_value, q_target, q_targets,
    soft_update, Batch, Ensemble, OBS_DIM, Q_INPUT_DIM,
};
pub use rollout::{
    finalize_episode, run_episode, Controller, EpisodeRecord, PolicyController, PolicyMode,
    RewardMode, ScriptedController,
};
pub use trainer::{train, train_variant_v, EpisodeLogRow, TrainArtifacts};
pub use transition::{ReplayBuffer, Transition};

use crate::env::EnvError;
use crate::geometry::GeometryError;
use crate::nn::NnError;
use crate::reward::RewardError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("replay buffer underfilled: {len} of {min} transitions")]
    BufferUnderfilled { len: usize, min: usize },
    #[error("no training scenarios supplied")]
    NoScenarios,
    #[error("behavior-cloning dataset is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}
