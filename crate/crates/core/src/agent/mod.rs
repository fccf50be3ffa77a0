//! DDPG from scratch: multilayer perceptrons with hand-derived gradients,
//! Adam, a replay buffer, target networks and delayed learning.

mod adam;
pub mod checkpoint;
mod ddpg;
pub mod mlp;
mod replay;
mod train;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use ddpg::{soft_update, DdpgAgent, DdpgConfig, UpdateStats};
pub use mlp::{Activation, ForwardCache, Layer, Mlp, MlpGradients};
pub use replay::{ReplayBuffer, Transition};
pub use train::{
    rollout, train, EpisodeRecord, Rollout, TrainError, TrainFailure, TrainLog, TrainOptions,
    SANITY_BAND_HZ,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("replay buffer holds {size} transitions, batch needs {batch}")]
    Underfull { size: usize, batch: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
