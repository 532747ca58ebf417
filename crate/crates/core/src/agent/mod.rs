//! Learned mode selection: observations, the actor-critic, PPO training and
//! greedy evaluation.

mod buffer;
mod evaluate;
mod model;
mod observation;
mod ppo;
mod train;

use thiserror::Error;

pub use buffer::{compute_gae, RolloutBuffer, Trajectory};
pub use evaluate::{evaluate, evaluate_static, evaluate_with, policy_from_checkpoint, EvalReport};
pub use model::{ActorCritic, ModelConfig, PolicyOutput};
pub use observation::{
    build_observation, observe, Bound, Observation, ObservationConfig, EGO_FEATURES, OPPONENT_FEATURES,
};
pub use ppo::{clipped_surrogate, ppo_update, LossStats, PpoConfig};
pub use train::{
    train, train_race, AgentCheckpoint, AgentMeta, BanditEnv, CheckpointHook, CurveRow, RaceTrainEnv, RolloutEnv,
    ScenarioDistribution, TrainConfig, TrainOutcome, CURVE_HEADER,
};

use crate::neural::NeuralError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("incomplete rollout buffer: {0}")]
    IncompleteBuffer(String),
    #[error("non-finite loss ({0})")]
    NonFiniteLoss(String),
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
