//! On-policy trajectory storage with dual reward and value streams.

use serde::{Deserialize, Serialize};

use super::config::AlgorithmVariant;
use super::gae::{compute_gae, decomposed_gae};
use crate::nn::ACTION_DIM;
use crate::reward::RewardBreakdown;
use crate::sim::Status;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs_self: Vec<f64>,
    /// The other agent's observation (joint observation of teammates).
    pub obs_others: Vec<f64>,
    /// Raw sampled action, before clamping.
    pub action: [f64; ACTION_DIM],
    pub logprob: f64,
    /// `alpha * r_dense + r_sparse` when gated, `r_self` otherwise.
    pub reward_self_stream: f64,
    /// `beta * other dense` when gated, 0 otherwise.
    pub reward_coop_stream: f64,
    pub value_self: f64,
    /// Always 0 outside PeMN.
    pub value_coop: f64,
    pub done: bool,
    pub status: Status,
    pub reward: RewardBreakdown,
}

impl Transition {
    pub fn reward_total(&self) -> f64 {
        self.reward_self_stream + self.reward_coop_stream
    }
}

/// Contiguous transitions of one agent from one worker, ending either at a
/// terminal transition (bootstrap 0) or at a rollout boundary.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Segment {
    pub transitions: Vec<Transition>,
    pub bootstrap_self: f64,
    pub bootstrap_coop: f64,
}

impl Segment {
    pub fn is_terminated(&self) -> bool {
        self.transitions.last().is_some_and(|t| t.done)
    }
}

/// One agent's rollout data plus (after [`AgentBuffer::compute_advantages`]) its
/// advantages and per-stream return targets, flattened in segment order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AgentBuffer {
    pub segments: Vec<Segment>,
    pub advantages: Vec<f64>,
    pub returns_self: Vec<f64>,
    pub returns_coop: Vec<f64>,
}

impl AgentBuffer {
    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.transitions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.segments.iter().flat_map(|s| s.transitions.iter())
    }

    pub fn clear(&mut self) {
        *self = AgentBuffer::default();
    }

    pub fn has_advantages(&self) -> bool {
        !self.is_empty() && self.advantages.len() == self.len()
    }

    /// Fills advantages and return targets.
    ///
    /// PeMN runs GAE separately on the self stream (against `value_self`) and the
    /// cooperation stream (against `value_coop`) and sums the advantages. IPPO and
    /// MAPPO run one GAE on the composed reward against their single critic.
    pub fn compute_advantages(&mut self, variant: AlgorithmVariant, gamma: f64, lambda: f64) -> Result<()> {
        let n = self.len();
        let mut adv = Vec::with_capacity(n);
        let mut ret_s = Vec::with_capacity(n);
        let mut ret_c = Vec::with_capacity(n);
        for seg in &self.segments {
            let t = &seg.transitions;
            let dones: Vec<bool> = t.iter().map(|x| x.done).collect();
            if variant == AlgorithmVariant::Pemn {
                let d = decomposed_gae(
                    &t.iter().map(|x| x.reward_self_stream).collect::<Vec<_>>(),
                    &t.iter().map(|x| x.value_self).collect::<Vec<_>>(),
                    seg.bootstrap_self,
                    &t.iter().map(|x| x.reward_coop_stream).collect::<Vec<_>>(),
                    &t.iter().map(|x| x.value_coop).collect::<Vec<_>>(),
                    seg.bootstrap_coop,
                    &dones,
                    gamma,
                    lambda,
                )?;
                adv.extend(d.advantages);
                ret_s.extend(d.self_returns);
                ret_c.extend(d.coop_returns);
            } else {
                let (a, r) = compute_gae(
                    &t.iter().map(Transition::reward_total).collect::<Vec<_>>(),
                    &t.iter().map(|x| x.value_self).collect::<Vec<_>>(),
                    seg.bootstrap_self,
                    &dones,
                    gamma,
                    lambda,
                )?;
                adv.extend(a);
                ret_s.extend(r);
                ret_c.extend(std::iter::repeat_n(0.0, t.len()));
            }
        }
        self.advantages = adv;
        self.returns_self = ret_s;
        self.returns_coop = ret_c;
        Ok(())
    }
}

/// Combined PeMN advantages `GAE(self stream, V_self) + GAE(coop stream, V_coop)`.
pub fn decomposed_advantage(
    buffer: &AgentBuffer,
    variant: AlgorithmVariant,
    gamma: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    if variant != AlgorithmVariant::Pemn {
        return Err(Error::VariantMismatch {
            operation: "decomposed_advantage",
            expected: "pemn",
        });
    }
    let mut scratch = AgentBuffer {
        segments: buffer.segments.clone(),
        ..AgentBuffer::default()
    };
    scratch.compute_advantages(variant, gamma, lambda)?;
    Ok(scratch.advantages)
}

/// Both agents' data for one update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBuffer {
    pub agents: [AgentBuffer; 2],
}

impl RolloutBuffer {
    pub fn clear(&mut self) {
        self.agents.iter_mut().for_each(AgentBuffer::clear);
    }

    pub fn is_empty(&self) -> bool {
        self.agents.iter().all(AgentBuffer::is_empty)
    }
}
