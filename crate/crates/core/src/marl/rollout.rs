//! Parallel on-policy rollout collection with auto-resetting environments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agent::{stream_seed, AgentModel};
use super::buffer::{RolloutBuffer, Segment, Transition};
use crate::nn::GaussianPolicy;
use crate::reward::{
    compose_step, dense_reward, sparse_reward, team_reward_bound_check, PersonalityParams, RewardConfig,
};
use crate::sim::{
    generate_scenario_with, ActionCommand, Env, ScenarioConfig, ScenarioParams, Status, NUM_AGENTS, OBS_DIM,
};
use crate::{Error, Result};

/// Scenario family a run trains or evaluates on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvSpec {
    pub level: u8,
    #[serde(flatten)]
    pub params: ScenarioParams,
    /// Replays this exact scenario in every episode instead of generating one per seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed: Option<ScenarioConfig>,
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec {
            level: 1,
            params: ScenarioParams::default(),
            fixed: None,
        }
    }
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        crate::sim::obstacle_count(self.level)?;
        self.params.validate()?;
        match &self.fixed {
            Some(cfg) => cfg.validate(),
            None => Ok(()),
        }
    }

    pub fn make_env(&self, scenario_seed: u64) -> Result<Env> {
        match &self.fixed {
            Some(cfg) => Ok(Env::new(cfg.clone())),
            None => Ok(Env::new(generate_scenario_with(
                &self.params,
                self.level,
                scenario_seed,
            )?)),
        }
    }
}

/// Terminal summary of one finished episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub worker: usize,
    pub scenario_seed: u64,
    /// Index into the opponent pool when agent 1 was a frozen background policy.
    pub opponent: Option<usize>,
    pub statuses: [Status; NUM_AGENTS],
    /// Undiscounted sum of composed rewards.
    pub returns: [f64; NUM_AGENTS],
    /// Steps each agent took before its terminal status.
    pub lengths: [u32; NUM_AGENTS],
}

/// Who controls each vehicle during collection.
#[derive(Clone, Copy, Debug)]
pub struct RolloutContext<'a> {
    pub models: &'a [AgentModel; NUM_AGENTS],
    /// When non-empty, agent 1 is driven by one of these policies (mean action,
    /// picked per episode) and records no transitions.
    pub opponents: &'a [GaussianPolicy],
    pub personalities: &'a [PersonalityParams; NUM_AGENTS],
    pub reward: &'a RewardConfig,
    pub spec: &'a EnvSpec,
}

impl RolloutContext<'_> {
    pub fn is_learner(&self, agent: usize) -> bool {
        agent == 0 || self.opponents.is_empty()
    }
}

/// One environment with its own random stream. Episodes continue across
/// rollouts; a new scenario is generated whenever both vehicles are terminal.
#[derive(Clone, Debug)]
pub struct Worker {
    index: usize,
    rng: ChaCha8Rng,
    env: Env,
    scenario_seed: u64,
    opponent: Option<usize>,
    obs: [[f64; OBS_DIM]; NUM_AGENTS],
    returns: [f64; NUM_AGENTS],
    lengths: [u32; NUM_AGENTS],
    open: [Segment; NUM_AGENTS],
}

/// Everything one rollout produced.
#[derive(Clone, Debug, Default)]
pub struct RolloutOutput {
    pub buffer: RolloutBuffer,
    pub episodes: Vec<EpisodeSummary>,
    /// Steps on which some agent's cooperative share exceeded the team dense reward.
    pub bound_breaches: usize,
    pub env_steps: usize,
}

struct WorkerOutput {
    segments: [Vec<Segment>; NUM_AGENTS],
    episodes: Vec<EpisodeSummary>,
    bound_breaches: usize,
}

impl Worker {
    pub fn new(index: usize, seed: u64, spec: &EnvSpec, opponents: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, index, 1000));
        let scenario_seed = rng.random();
        let env = spec.make_env(scenario_seed).map_err(|e| env_fault(index, 0, e))?;
        let mut w = Worker {
            index,
            rng,
            env,
            scenario_seed,
            opponent: None,
            obs: [[0.0; OBS_DIM]; NUM_AGENTS],
            returns: [0.0; NUM_AGENTS],
            lengths: [0; NUM_AGENTS],
            open: Default::default(),
        };
        w.start_episode(opponents);
        Ok(w)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    fn start_episode(&mut self, opponents: usize) {
        self.opponent = (opponents > 0).then(|| self.rng.random_range(0..opponents));
        self.obs = [self.env.observe(0).to_array(), self.env.observe(1).to_array()];
        self.returns = [0.0; NUM_AGENTS];
        self.lengths = [0; NUM_AGENTS];
    }

    fn reset(&mut self, spec: &EnvSpec, opponents: usize) -> Result<()> {
        self.scenario_seed = self.rng.random();
        self.env = spec
            .make_env(self.scenario_seed)
            .map_err(|e| env_fault(self.index, self.env.step_count(), e))?;
        self.start_episode(opponents);
        Ok(())
    }

    fn collect(&mut self, ctx: &RolloutContext, steps: usize) -> Result<WorkerOutput> {
        let mut out = WorkerOutput {
            segments: Default::default(),
            episodes: Vec::new(),
            bound_breaches: 0,
        };
        let v_max = self.env.scene().config.v_max;
        for _ in 0..steps {
            let statuses = *self.env.statuses();
            let mut actions = [ActionCommand::default(); NUM_AGENTS];
            let mut pending: [Option<([f64; 2], f64, f64, f64)>; NUM_AGENTS] = [None; NUM_AGENTS];
            for i in 0..NUM_AGENTS {
                if statuses[i].is_terminal() {
                    continue;
                }
                let own = &self.obs[i];
                if ctx.is_learner(i) {
                    let model = &ctx.models[i];
                    let (raw, logp) = model.policy.sample(own, &mut self.rng)?;
                    let (vs, vc) = model.values(own, &self.obs[1 - i])?;
                    actions[i] = ActionCommand::from_raw(raw);
                    pending[i] = Some((raw, logp, vs, vc));
                } else {
                    let policy = &ctx.opponents[self.opponent.unwrap_or(0)];
                    actions[i] = ActionCommand::from_raw(policy.mean(own)?);
                }
            }
            let before = [self.env.progress(0), self.env.progress(1)];
            let result = self.env.step(actions);
            let step = self.env.step_count();
            let mut raw = [(0.0, 0.0); NUM_AGENTS];
            for i in 0..NUM_AGENTS {
                if !statuses[i].is_terminal() {
                    let dense = dense_reward(
                        ctx.reward,
                        before[i],
                        result.outcome.progress[i],
                        result.states[i].speed,
                        v_max,
                    );
                    let sparse = sparse_reward(ctx.reward, result.outcome.statuses[i]);
                    if !(dense.is_finite() && result.states[i].speed.is_finite()) {
                        return Err(Error::EnvFault {
                            worker: self.index,
                            step,
                            reason: format!("non-finite state for agent {i} in scenario {}", self.scenario_seed),
                        });
                    }
                    raw[i] = (dense, sparse);
                }
            }
            let rewards = compose_step(
                ctx.reward,
                ctx.personalities,
                &raw,
                result.outcome.inter_vehicle_distance,
            );
            if team_reward_bound_check(&rewards).is_err() {
                out.bound_breaches += 1;
            }
            let next_obs = result.observations.map(|o| o.to_array());
            for i in 0..NUM_AGENTS {
                if statuses[i].is_terminal() {
                    continue;
                }
                self.returns[i] += rewards[i].r_total;
                self.lengths[i] += 1;
                if let Some((action, logprob, value_self, value_coop)) = pending[i] {
                    let status = result.outcome.statuses[i];
                    let done = status.is_terminal();
                    self.open[i].transitions.push(Transition {
                        obs_self: self.obs[i].to_vec(),
                        obs_others: self.obs[1 - i].to_vec(),
                        action,
                        logprob,
                        reward_self_stream: rewards[i].self_stream(),
                        reward_coop_stream: rewards[i].r_coop,
                        value_self,
                        value_coop,
                        done,
                        status,
                        reward: rewards[i],
                    });
                    if done {
                        out.segments[i].push(std::mem::take(&mut self.open[i]));
                    }
                }
            }
            self.obs = next_obs;
            if self.env.is_done() {
                out.episodes.push(EpisodeSummary {
                    worker: self.index,
                    scenario_seed: self.scenario_seed,
                    opponent: self.opponent,
                    statuses: *self.env.statuses(),
                    returns: self.returns,
                    lengths: self.lengths,
                });
                self.reset(ctx.spec, ctx.opponents.len())?;
            }
        }
        // Truncated segments bootstrap from the critics at the current state.
        for i in 0..NUM_AGENTS {
            let mut seg = std::mem::take(&mut self.open[i]);
            if seg.transitions.is_empty() {
                continue;
            }
            let (vs, vc) = ctx.models[i].values(&self.obs[i], &self.obs[1 - i])?;
            seg.bootstrap_self = vs;
            seg.bootstrap_coop = vc;
            out.segments[i].push(seg);
        }
        Ok(out)
    }
}

fn env_fault(worker: usize, step: u32, e: Error) -> Error {
    Error::EnvFault {
        worker,
        step,
        reason: e.to_string(),
    }
}

/// Builds `count` workers with seeds derived from `seed` and the worker index.
pub fn make_workers(count: usize, seed: u64, spec: &EnvSpec, opponents: usize) -> Result<Vec<Worker>> {
    (0..count).map(|i| Worker::new(i, seed, spec, opponents)).collect()
}

/// Runs `total_steps / workers.len()` environment steps on every worker in
/// parallel and merges their data in worker order.
pub fn collect_rollouts(workers: &mut [Worker], ctx: &RolloutContext, total_steps: usize) -> Result<RolloutOutput> {
    let mut output = RolloutOutput::default();
    if workers.is_empty() || total_steps == 0 {
        return Ok(output);
    }
    let per_worker = total_steps / workers.len();
    let results: Vec<Result<WorkerOutput>> = workers.par_iter_mut().map(|w| w.collect(ctx, per_worker)).collect();
    for r in results {
        let r = r?;
        for (agent, segs) in r.segments.into_iter().enumerate() {
            output.buffer.agents[agent].segments.extend(segs);
        }
        output.episodes.extend(r.episodes);
        output.bound_breaches += r.bound_breaches;
    }
    output.env_steps = per_worker * workers.len();
    Ok(output)
}
