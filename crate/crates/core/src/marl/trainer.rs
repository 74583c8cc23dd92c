//! Training loop: collect, estimate advantages, update, repeat.

use serde::{Deserialize, Serialize};

use super::agent::{stream_seed, AgentModel, AgentOptimizer};
use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use super::ppo::{ppo_update, UpdateStats};
use super::rollout::{collect_rollouts, make_workers, EnvSpec, EpisodeSummary, RolloutContext, RolloutOutput, Worker};
use crate::nn::GaussianPolicy;
use crate::reward::RewardConfig;
use crate::sim::{Status, NUM_AGENTS};
use crate::Result;

/// Outcome counts and update diagnostics for one agent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentUpdateMetrics {
    pub trained: bool,
    pub mean_return: f64,
    pub successes: usize,
    pub collisions: usize,
    pub offroads: usize,
    pub timeouts: usize,
    pub stats: UpdateStats,
}

/// One line of the training metrics stream.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateMetrics {
    pub update: u64,
    pub env_steps: u64,
    pub episodes: usize,
    pub bound_breaches: usize,
    pub agents: [AgentUpdateMetrics; NUM_AGENTS],
}

impl UpdateMetrics {
    fn tally(&mut self, episodes: &[EpisodeSummary]) {
        self.episodes = episodes.len();
        for (i, a) in self.agents.iter_mut().enumerate() {
            for e in episodes {
                a.mean_return += e.returns[i];
                match e.statuses[i] {
                    Status::ReachGoal => a.successes += 1,
                    Status::Collision => a.collisions += 1,
                    Status::OffRoad => a.offroads += 1,
                    Status::Timeout => a.timeouts += 1,
                    Status::Running => {}
                }
            }
            if !episodes.is_empty() {
                a.mean_return /= episodes.len() as f64;
            }
        }
    }
}

/// Owns both agents' parameters, optimizers and rollout workers.
#[derive(Clone, Debug)]
pub struct Trainer {
    cfg: TrainConfig,
    spec: EnvSpec,
    reward: RewardConfig,
    models: [AgentModel; NUM_AGENTS],
    optimizers: [AgentOptimizer; NUM_AGENTS],
    workers: Vec<Worker>,
    opponents: Vec<GaussianPolicy>,
    updates: u64,
    env_steps: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, spec: EnvSpec, reward: RewardConfig) -> Result<Self> {
        Self::with_opponents(cfg, spec, reward, Vec::new())
    }

    /// Trains agent 0 only, against frozen background policies driving agent 1.
    pub fn with_opponents(
        cfg: TrainConfig,
        spec: EnvSpec,
        reward: RewardConfig,
        opponents: Vec<GaussianPolicy>,
    ) -> Result<Self> {
        cfg.validate()?;
        spec.validate()?;
        reward.validate()?;
        let models = [
            AgentModel::new(cfg.variant, cfg.seed, 0)?,
            AgentModel::new(cfg.variant, cfg.seed, 1)?,
        ];
        let optimizers = [
            AgentOptimizer::new(&models[0], cfg.lr),
            AgentOptimizer::new(&models[1], cfg.lr),
        ];
        let workers = make_workers(cfg.workers, cfg.seed, &spec, opponents.len())?;
        Ok(Trainer {
            cfg,
            spec,
            reward,
            models,
            optimizers,
            workers,
            opponents,
            updates: 0,
            env_steps: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    pub fn models(&self) -> &[AgentModel; NUM_AGENTS] {
        &self.models
    }

    pub fn models_mut(&mut self) -> &mut [AgentModel; NUM_AGENTS] {
        &mut self.models
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn is_trained(&self, agent: usize) -> bool {
        agent == 0 || self.opponents.is_empty()
    }

    /// Collects one rollout with the current parameters without updating them.
    pub fn collect(&mut self) -> Result<RolloutOutput> {
        let ctx = RolloutContext {
            models: &self.models,
            opponents: &self.opponents,
            personalities: &self.cfg.personalities,
            reward: &self.reward,
            spec: &self.spec,
        };
        collect_rollouts(&mut self.workers, &ctx, self.cfg.rollout_steps)
    }

    /// One full iteration: rollout, advantages, clipped-surrogate epochs.
    pub fn update(&mut self) -> Result<UpdateMetrics> {
        let mut rollout = self.collect()?;
        self.updates += 1;
        self.env_steps += rollout.env_steps as u64;
        let mut metrics = UpdateMetrics {
            update: self.updates,
            env_steps: self.env_steps,
            bound_breaches: rollout.bound_breaches,
            ..UpdateMetrics::default()
        };
        metrics.tally(&rollout.episodes);
        for agent in 0..NUM_AGENTS {
            if !self.is_trained(agent) {
                continue;
            }
            let buffer = &mut rollout.buffer.agents[agent];
            buffer.compute_advantages(self.cfg.variant, self.cfg.gamma, self.cfg.gae_lambda)?;
            let seed = stream_seed(self.cfg.seed.wrapping_add(self.updates), agent, 2000);
            metrics.agents[agent].stats = ppo_update(
                &mut self.models[agent],
                &mut self.optimizers[agent],
                buffer,
                &self.cfg,
                agent,
                seed,
            )?;
            metrics.agents[agent].trained = true;
        }
        rollout.buffer.clear();
        Ok(metrics)
    }

    /// Runs every update that fits in the step budget, calling `on_update` after each.
    pub fn train<F>(&mut self, mut on_update: F) -> Result<()>
    where
        F: FnMut(&Trainer, &UpdateMetrics) -> Result<()>,
    {
        while self.updates < self.cfg.num_updates() {
            let m = self.update()?;
            on_update(self, &m)?;
        }
        Ok(())
    }

    pub fn checkpoint(&self, agent: usize) -> Checkpoint {
        Checkpoint {
            format_version: Checkpoint::FORMAT_VERSION,
            agent,
            personality: self.cfg.personalities[agent],
            train: self.cfg.clone(),
            scenario: self.spec.clone(),
            update: self.updates,
            env_steps: self.env_steps,
            model: self.models[agent].clone(),
            optimizer: self.optimizers[agent].clone(),
        }
    }
}
