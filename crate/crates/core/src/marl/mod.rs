//! Multi-agent clipped-surrogate training with IPPO, MAPPO and decomposed (PeMN) critics.

mod agent;
mod buffer;
mod checkpoint;
mod config;
mod gae;
mod ppo;
mod rollout;
mod trainer;

pub use agent::{AgentModel, AgentOptimizer};
pub use buffer::{decomposed_advantage, AgentBuffer, RolloutBuffer, Segment, Transition};
pub use checkpoint::Checkpoint;
pub use config::{AlgorithmVariant, TrainConfig};
pub use gae::{compute_gae, decomposed_gae, normalize, DecomposedGae};
pub use ppo::{
    apply_gradients, clipped_surrogate, minibatch_loss_grads, ppo_update, MinibatchLoss, PpoGrads, PpoSample,
    UpdateStats,
};
pub use rollout::{collect_rollouts, make_workers, EnvSpec, EpisodeSummary, RolloutContext, RolloutOutput, Worker};
pub use trainer::{AgentUpdateMetrics, Trainer, UpdateMetrics};
