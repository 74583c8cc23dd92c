//! Dense/sparse/self rewards and the personality-gated composition.
//!
//! Sharing rule: `alpha` scales only the agent's own dense reward, the agent's
//! own terminal (sparse) reward passes through unscaled, and the cooperative
//! share `beta * sum(other dense)` never contains another agent's terminal reward.

use serde::{Deserialize, Serialize};

use crate::sim::Status;
use crate::{Error, Result};

const PERSONALITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub k1: f64,
    pub k2: f64,
    pub goal_reward: f64,
    pub collision_penalty: f64,
    pub offroad_penalty: f64,
    pub timeout_reward: f64,
    /// Cooperation applies when the vehicles are at most this far apart.
    pub gate_distance: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            k1: 1.0,
            k2: 0.1,
            goal_reward: 20.0,
            collision_penalty: -30.0,
            offroad_penalty: -30.0,
            timeout_reward: 0.0,
            gate_distance: 40.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("reward.k1", self.k1),
            ("reward.k2", self.k2),
            ("reward.goal_reward", self.goal_reward),
            ("reward.collision_penalty", self.collision_penalty),
            ("reward.offroad_penalty", self.offroad_penalty),
            ("reward.timeout_reward", self.timeout_reward),
            ("reward.gate_distance", self.gate_distance),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        if self.gate_distance < 0.0 {
            return Err(Error::config("reward.gate_distance", "must be non-negative"));
        }
        Ok(())
    }
}

/// `(alpha, beta)` with `alpha, beta >= 0` and `alpha + beta = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPersonality", into = "RawPersonality")]
pub struct PersonalityParams {
    alpha: f64,
    beta: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct RawPersonality {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawPersonality> for PersonalityParams {
    type Error = Error;

    fn try_from(raw: RawPersonality) -> Result<Self> {
        PersonalityParams::new(raw.alpha, raw.beta)
    }
}

impl From<PersonalityParams> for RawPersonality {
    fn from(p: PersonalityParams) -> Self {
        RawPersonality {
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

impl PersonalityParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let bad = |reason| Err(Error::InvalidPersonality { alpha, beta, reason });
        if !alpha.is_finite() || !beta.is_finite() {
            return bad("values must be finite");
        }
        if alpha < 0.0 || beta < 0.0 {
            return bad("alpha and beta must be non-negative");
        }
        if (alpha + beta - 1.0).abs() > PERSONALITY_TOL {
            return bad("alpha + beta must equal 1");
        }
        Ok(PersonalityParams { alpha, beta })
    }

    /// `beta = 1 - alpha`.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidPersonality {
                alpha,
                beta: 1.0 - alpha,
                reason: "alpha must lie in [0, 1]",
            });
        }
        PersonalityParams::new(alpha, 1.0 - alpha)
    }

    pub fn selfish() -> Self {
        PersonalityParams { alpha: 1.0, beta: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Per-step reward terms for one agent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_dense: f64,
    pub r_sparse: f64,
    /// `r_dense + r_sparse`.
    pub r_self: f64,
    /// Cooperative share credited to this agent (`beta * other dense`, 0 when ungated).
    pub r_coop: f64,
    pub r_total: f64,
    /// `alpha * r_dense + r_sparse` when gated, `r_self` otherwise; `r_total = r_own + r_coop`.
    pub r_own: f64,
    pub gated: bool,
}

impl RewardBreakdown {
    /// Fresh breakdown with `r_self` filled in and composition pending.
    pub fn new(r_dense: f64, r_sparse: f64) -> Self {
        let r_self = r_dense + r_sparse;
        RewardBreakdown {
            r_dense,
            r_sparse,
            r_self,
            r_coop: 0.0,
            r_total: r_self,
            r_own: r_self,
            gated: false,
        }
    }

    /// Portion of `r_total` attributed to the agent's own behaviour
    /// (`alpha * r_dense + r_sparse` when gated, `r_self` otherwise).
    pub fn self_stream(&self) -> f64 {
        self.r_own
    }
}

/// `k1 * (prev - new) + k2 * speed / v_max`, with progress measured as distance remaining.
pub fn dense_reward(cfg: &RewardConfig, prev_progress: f64, new_progress: f64, speed: f64, v_max: f64) -> f64 {
    debug_assert!(v_max > 0.0);
    cfg.k1 * (prev_progress - new_progress) + cfg.k2 * speed / v_max
}

pub fn sparse_reward(cfg: &RewardConfig, status: Status) -> f64 {
    match status {
        Status::Running => 0.0,
        Status::ReachGoal => cfg.goal_reward,
        Status::Collision => cfg.collision_penalty,
        Status::OffRoad => cfg.offroad_penalty,
        Status::Timeout => cfg.timeout_reward,
    }
}

/// Applies the personality gate, filling `r_coop`, `r_total` and `gated`.
pub fn compose_reward(
    cfg: &RewardConfig,
    personality: &PersonalityParams,
    breakdown: &mut RewardBreakdown,
    other_dense_sum: f64,
    inter_vehicle_distance: f64,
) -> f64 {
    breakdown.r_self = breakdown.r_dense + breakdown.r_sparse;
    if inter_vehicle_distance <= cfg.gate_distance {
        breakdown.gated = true;
        breakdown.r_coop = personality.beta * other_dense_sum;
        breakdown.r_own = personality.alpha * breakdown.r_dense + breakdown.r_sparse;
        breakdown.r_total = breakdown.r_own + breakdown.r_coop;
    } else {
        breakdown.gated = false;
        breakdown.r_coop = 0.0;
        breakdown.r_own = breakdown.r_self;
        breakdown.r_total = breakdown.r_self;
    }
    breakdown.r_total
}

/// Composes rewards for every agent of one step from their raw dense/sparse terms.
pub fn compose_step(
    cfg: &RewardConfig,
    personalities: &[PersonalityParams],
    raw: &[(f64, f64)],
    inter_vehicle_distance: f64,
) -> Vec<RewardBreakdown> {
    raw.iter()
        .zip(personalities)
        .enumerate()
        .map(|(i, (&(dense, sparse), p))| {
            let others: f64 = raw.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r.0).sum();
            let mut b = RewardBreakdown::new(dense, sparse);
            compose_reward(cfg, p, &mut b, others, inter_vehicle_distance);
            b
        })
        .collect()
}

/// An agent whose cooperative share exceeded the step's team dense reward.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundBreach {
    pub agent: usize,
    pub coop: f64,
    pub team_dense: f64,
}

/// Audits `r_coop <= sum of all agents' dense rewards` for one step.
///
/// Holds by construction whenever dense rewards are non-negative. A vehicle
/// moving away from its goal produces negative dense reward, which can break
/// the bound; the breaches are reported rather than clamped.
pub fn team_reward_bound_check(step: &[RewardBreakdown]) -> std::result::Result<(), Vec<BoundBreach>> {
    let team_dense: f64 = step.iter().map(|b| b.r_dense).sum();
    let breaches: Vec<BoundBreach> = step
        .iter()
        .enumerate()
        .filter(|(_, b)| b.r_coop > team_dense + 1e-12)
        .map(|(agent, b)| BoundBreach {
            agent,
            coop: b.r_coop,
            team_dense,
        })
        .collect();
    if breaches.is_empty() {
        Ok(())
    } else {
        Err(breaches)
    }
}
