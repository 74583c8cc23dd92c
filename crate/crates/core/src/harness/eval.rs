//! Deterministic evaluation, episode recording and replay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::MetricsRecord;
use crate::marl::EnvSpec;
use crate::nn::GaussianPolicy;
use crate::reward::{compose_step, dense_reward, sparse_reward, PersonalityParams, RewardBreakdown, RewardConfig};
use crate::sim::{ActionCommand, Status, VehicleState, NUM_AGENTS};
use crate::{Error, Result};

/// One vehicle at one step, after the step was applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: u32,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    /// Applied (clamped) command.
    pub steer: f64,
    pub accel: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardBreakdown>,
}

impl TrajectoryRow {
    pub fn state(&self) -> VehicleState {
        VehicleState {
            x: self.x,
            y: self.y,
            heading: self.heading,
            speed: self.speed,
        }
    }
}

/// A fully recorded evaluation episode. Rows exist only for steps the agent took.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub scenario_seed: u64,
    pub spec: EnvSpec,
    pub statuses: [Status; NUM_AGENTS],
    pub lengths: [u32; NUM_AGENTS],
    /// Steps until both vehicles were terminal.
    pub duration_steps: u32,
    pub rows: Vec<TrajectoryRow>,
}

impl EpisodeRecord {
    pub fn rows_for(&self, agent: usize) -> impl Iterator<Item = &TrajectoryRow> {
        self.rows.iter().filter(move |r| r.agent == agent)
    }
}

/// Per-agent metrics plus the recorded episodes (empty unless recording was requested).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: [MetricsRecord; NUM_AGENTS],
    #[serde(skip)]
    pub episodes: Vec<EpisodeRecord>,
}

/// Settings shared by every evaluation entry point.
#[derive(Clone, Debug)]
pub struct EvalSettings<'a> {
    pub spec: &'a EnvSpec,
    pub reward: &'a RewardConfig,
    pub personalities: [PersonalityParams; NUM_AGENTS],
    pub episodes: usize,
    pub seed: u64,
    pub record: bool,
}

/// Scenario seeds for `episodes` evaluation episodes.
pub fn eval_scenario_seeds(seed: u64, episodes: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_E7A1_0000_0000);
    (0..episodes).map(|_| rng.random()).collect()
}

/// Runs one episode with both vehicles taking their policy's mean action.
pub fn run_episode(
    policies: [&GaussianPolicy; NUM_AGENTS],
    settings: &EvalSettings,
    episode: u64,
    scenario_seed: u64,
) -> Result<EpisodeRecord> {
    let mut env = settings.spec.make_env(scenario_seed)?;
    let v_max = env.scene().config.v_max;
    let mut rows = Vec::new();
    let mut lengths = [0u32; NUM_AGENTS];
    let mut obs = [env.observe(0).to_array(), env.observe(1).to_array()];
    while !env.is_done() {
        let statuses = *env.statuses();
        let mut actions = [ActionCommand::default(); NUM_AGENTS];
        for i in 0..NUM_AGENTS {
            if !statuses[i].is_terminal() {
                actions[i] = ActionCommand::from_raw(policies[i].mean(&obs[i])?);
            }
        }
        let before = [env.progress(0), env.progress(1)];
        let result = env.step(actions);
        let mut raw = [(0.0, 0.0); NUM_AGENTS];
        for i in 0..NUM_AGENTS {
            if !statuses[i].is_terminal() {
                raw[i] = (
                    dense_reward(
                        settings.reward,
                        before[i],
                        result.outcome.progress[i],
                        result.states[i].speed,
                        v_max,
                    ),
                    sparse_reward(settings.reward, result.outcome.statuses[i]),
                );
            }
        }
        let rewards = compose_step(
            settings.reward,
            &settings.personalities,
            &raw,
            result.outcome.inter_vehicle_distance,
        );
        for i in 0..NUM_AGENTS {
            if statuses[i].is_terminal() {
                continue;
            }
            lengths[i] += 1;
            if settings.record {
                let s = result.states[i];
                rows.push(TrajectoryRow {
                    step: env.step_count(),
                    agent: i,
                    x: s.x,
                    y: s.y,
                    heading: s.heading,
                    speed: s.speed,
                    steer: actions[i].steer,
                    accel: actions[i].accel,
                    status: result.outcome.statuses[i],
                    reward: Some(rewards[i]),
                });
            }
        }
        obs = result.observations.map(|o| o.to_array());
    }
    Ok(EpisodeRecord {
        episode,
        scenario_seed,
        spec: settings.spec.clone(),
        statuses: *env.statuses(),
        lengths,
        duration_steps: env.step_count(),
        rows,
    })
}

/// Evaluates a policy pair over freshly seeded scenarios. Deterministic: the
/// scenario seeds come from `settings.seed` and actions are policy means.
pub fn evaluate(policies: [&GaussianPolicy; NUM_AGENTS], settings: &EvalSettings) -> Result<EvalReport> {
    if settings.episodes == 0 {
        return Err(Error::config("run.eval_episodes", "must be at least 1"));
    }
    let seeds = eval_scenario_seeds(settings.seed, settings.episodes);
    let episodes: Vec<EpisodeRecord> = seeds
        .par_iter()
        .enumerate()
        .map(|(k, &s)| run_episode(policies, settings, k as u64, s))
        .collect::<Result<_>>()?;
    let dt = settings.spec.params.dt;
    let metrics = [0, 1].map(|i| {
        let outcomes: Vec<(Status, f64)> = episodes
            .iter()
            .map(|e| (e.statuses[i], e.duration_steps as f64 * dt))
            .collect();
        MetricsRecord::from_outcomes(&outcomes)
    });
    Ok(EvalReport {
        metrics,
        episodes: if settings.record { episodes } else { Vec::new() },
    })
}

/// Re-simulates a recorded episode from its scenario seed and recorded commands.
/// Returns the replayed rows in the same order as `record.rows`.
pub fn replay_episode(record: &EpisodeRecord) -> Result<Vec<TrajectoryRow>> {
    let mut env = record.spec.make_env(record.scenario_seed)?;
    let mut out = Vec::with_capacity(record.rows.len());
    let mut idx = 0;
    while idx < record.rows.len() {
        let step = record.rows[idx].step;
        let mut actions = [ActionCommand::default(); NUM_AGENTS];
        let end = record.rows[idx..]
            .iter()
            .position(|r| r.step != step)
            .map_or(record.rows.len(), |p| idx + p);
        for r in &record.rows[idx..end] {
            actions[r.agent] = ActionCommand {
                steer: r.steer,
                accel: r.accel,
            };
        }
        let result = env.step(actions);
        if env.step_count() != step {
            return Err(Error::config("episode rows", format!("non-contiguous step {step}")));
        }
        for r in &record.rows[idx..end] {
            let s = result.states[r.agent];
            out.push(TrajectoryRow {
                x: s.x,
                y: s.y,
                heading: s.heading,
                speed: s.speed,
                status: result.outcome.statuses[r.agent],
                ..r.clone()
            });
        }
        idx = end;
    }
    Ok(out)
}
