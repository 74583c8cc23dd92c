//! Personality-weighted multi-agent PPO for a two-vehicle narrow-road meeting task.
//!
//! Each vehicle's reward is split into a self component and a cooperative
//! share of the other vehicle's dense reward, weighted by a personality pair
//! `(alpha, beta)` with `alpha + beta = 1`. The PeMN critic mirrors that split
//! with one value network per reward stream.
//!
//! Module map:
//! - [`nn`]: dense matrices, tanh MLPs with analytic gradients, Adam, Gaussian policy head.
//! - [`sim`]: scenario generation, kinematic bicycle model, lidar, termination.
//! - [`reward`]: dense/sparse/self rewards and personality-gated composition.
//! - [`marl`]: rollouts, decomposed GAE, clipped-surrogate updates (IPPO, MAPPO, PeMN).
//! - [`harness`]: train / eval / sweep / cross-eval / export orchestration and metrics.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod marl;
pub mod nn;
pub mod reward;
pub mod sim;

pub use error::{Error, Result};

pub use marl::{AlgorithmVariant, TrainConfig};
pub use reward::{PersonalityParams, RewardBreakdown, RewardConfig};
pub use sim::{ScenarioConfig, Status, VehicleState};
