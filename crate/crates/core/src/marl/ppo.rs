//! Clipped-surrogate update with analytic gradients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{AgentModel, AgentOptimizer};
use super::buffer::{AgentBuffer, Transition};
use super::config::TrainConfig;
use super::gae::normalize;
use crate::nn::{clip_global_norm, gaussian_log_prob, Mlp, MlpGrads, MlpTrace, ACTION_DIM};
use crate::{Error, Result};

/// `min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)` for one sample.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    (ratio * advantage).min(clipped * advantage)
}

/// Derivative of [`clipped_surrogate`] with respect to the ratio.
fn surrogate_ratio_grad(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        0.0
    }
}

/// Diagnostics averaged over every minibatch of one update.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub coop_value_loss: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
    pub samples: usize,
}

/// Gradients of the minibatch loss for every network of an agent.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoGrads {
    pub policy: MlpGrads,
    pub log_std: [f64; ACTION_DIM],
    pub value: MlpGrads,
    pub coop_value: Option<MlpGrads>,
}

impl PpoGrads {
    pub fn zeros_like(model: &AgentModel) -> Self {
        PpoGrads {
            policy: MlpGrads::zeros_like(&model.policy.mean_net),
            log_std: [0.0; ACTION_DIM],
            value: MlpGrads::zeros_like(&model.value),
            coop_value: model.coop_value.as_ref().map(MlpGrads::zeros_like),
        }
    }

    pub fn clear(&mut self) {
        self.policy.clear();
        self.log_std = [0.0; ACTION_DIM];
        self.value.clear();
        if let Some(c) = self.coop_value.as_mut() {
            c.clear();
        }
    }
}

/// One training sample: a stored transition with its (normalized) advantage
/// and per-stream return targets.
#[derive(Clone, Copy, Debug)]
pub struct PpoSample<'a> {
    pub transition: &'a Transition,
    pub advantage: f64,
    pub return_self: f64,
    pub return_coop: f64,
}

/// Loss terms of one minibatch (means over its samples).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MinibatchLoss {
    /// Negated clipped surrogate.
    pub policy: f64,
    /// `0.5 * (V - R)^2` for the main critic.
    pub value: f64,
    pub coop_value: f64,
    pub entropy: f64,
    /// `policy + value_coef * (value + coop_value) - entropy_coef * entropy`.
    pub total: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Evaluates the minibatch loss and writes its exact gradient into `grads`
/// (which is cleared first).
pub fn minibatch_loss_grads(
    model: &AgentModel,
    samples: &[PpoSample],
    cfg: &TrainConfig,
    grads: &mut PpoGrads,
) -> Result<MinibatchLoss> {
    grads.clear();
    let mut out = MinibatchLoss::default();
    if samples.is_empty() {
        return Ok(out);
    }
    let mut trace = MlpTrace::default();
    let inv = 1.0 / samples.len() as f64;
    let log_std = model.policy.log_std();
    let var = log_std.map(|l| (2.0 * l).exp());
    let mut clipped = 0usize;
    for sample in samples {
        let t = sample.transition;
        let a = sample.advantage;
        model.policy.mean_net.forward_traced(&t.obs_self, &mut trace)?;
        let mean = [trace.output()[0], trace.output()[1]];
        let logp = gaussian_log_prob(&mean, &log_std, &t.action);
        let log_ratio = logp - t.logprob;
        let ratio = log_ratio.exp();
        out.policy -= clipped_surrogate(ratio, a, cfg.clip_eps);
        out.mean_ratio += ratio;
        out.approx_kl += ratio - 1.0 - log_ratio;
        if (ratio - 1.0).abs() > cfg.clip_eps {
            clipped += 1;
        }
        // d(-surrogate)/d(logp)
        let g = -surrogate_ratio_grad(ratio, a, cfg.clip_eps) * ratio * inv;
        let mut upstream = [0.0; ACTION_DIM];
        for j in 0..ACTION_DIM {
            let d = t.action[j] - mean[j];
            upstream[j] = g * d / var[j];
            grads.log_std[j] += g * (d * d / var[j] - 1.0);
        }
        model
            .policy
            .mean_net
            .backward_acc(&trace, &upstream, &mut grads.policy)?;

        let v_in = model.value_input(&t.obs_self, &t.obs_others);
        out.value += value_grads(
            &model.value,
            &v_in,
            sample.return_self,
            cfg.value_coef * inv,
            &mut trace,
            &mut grads.value,
        )?;
        if let (Some(net), Some(g)) = (model.coop_value.as_ref(), grads.coop_value.as_mut()) {
            out.coop_value += value_grads(
                net,
                &t.obs_others,
                sample.return_coop,
                cfg.value_coef * inv,
                &mut trace,
                g,
            )?;
        }
    }
    for g in grads.log_std.iter_mut() {
        *g -= cfg.entropy_coef;
    }
    out.policy *= inv;
    out.value *= inv;
    out.coop_value *= inv;
    out.mean_ratio *= inv;
    out.approx_kl *= inv;
    out.clip_fraction = clipped as f64 * inv;
    out.entropy = model.policy.entropy();
    out.total = out.policy + cfg.value_coef * (out.value + out.coop_value) - cfg.entropy_coef * out.entropy;
    Ok(out)
}

fn value_grads(
    net: &Mlp,
    input: &[f64],
    target: f64,
    coef: f64,
    trace: &mut MlpTrace,
    grads: &mut MlpGrads,
) -> Result<f64> {
    net.forward_traced(input, trace)?;
    let err = trace.output()[0] - target;
    net.backward_acc(trace, &[coef * err], grads)?;
    Ok(0.5 * err * err)
}

/// Clips each network's gradient and applies Adam to the policy, the critic and
/// the cooperation critic, in that order. Returns the policy gradient norm.
pub fn apply_gradients(
    model: &mut AgentModel,
    optimizer: &mut AgentOptimizer,
    grads: &mut PpoGrads,
    max_grad_norm: f64,
) -> Result<f64> {
    let mut pg = grads.policy.tensors_mut();
    pg.push(&mut grads.log_std[..]);
    let norm = clip_global_norm(&mut pg, max_grad_norm);
    let pg: Vec<&[f64]> = pg.into_iter().map(|g| &*g).collect();
    let names = model.policy.tensor_names();
    optimizer.policy.step(&mut model.policy.tensors_mut(), &pg, &names)?;
    model.policy.clamp_log_std();

    clip_global_norm(&mut grads.value.tensors_mut(), max_grad_norm);
    let names = model.value.tensor_names();
    optimizer
        .value
        .step(&mut model.value.tensors_mut(), &grads.value.tensors(), &names)?;
    if let (Some(net), Some(g), Some(opt)) = (
        model.coop_value.as_mut(),
        grads.coop_value.as_mut(),
        optimizer.coop_value.as_mut(),
    ) {
        clip_global_norm(&mut g.tensors_mut(), max_grad_norm);
        let names = net.tensor_names();
        opt.step(&mut net.tensors_mut(), &g.tensors(), &names)?;
    }
    Ok(norm)
}

/// Runs `cfg.epochs` passes of seeded shuffled minibatches over one agent's
/// buffer, applying one optimizer step per minibatch.
///
/// The buffer must hold computed advantages; they are normalized over the whole
/// batch before the first epoch. A non-finite loss aborts the update with the
/// offending minibatch; parameters updated by earlier minibatches stay updated.
pub fn ppo_update(
    model: &mut AgentModel,
    optimizer: &mut AgentOptimizer,
    buffer: &AgentBuffer,
    cfg: &TrainConfig,
    agent: usize,
    shuffle_seed: u64,
) -> Result<UpdateStats> {
    let n = buffer.len();
    let mut stats = UpdateStats::default();
    if n == 0 {
        return Ok(stats);
    }
    if !buffer.has_advantages() {
        return Err(Error::dims("ppo_update advantages", n, buffer.advantages.len()));
    }
    let mut adv = buffer.advantages.clone();
    normalize(&mut adv);
    let samples: Vec<PpoSample> = buffer
        .transitions()
        .enumerate()
        .map(|(i, t)| PpoSample {
            transition: t,
            advantage: adv[i],
            return_self: buffer.returns_self[i],
            return_coop: buffer.returns_coop[i],
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grads = PpoGrads::zeros_like(model);
    let mut batch = Vec::with_capacity(cfg.minibatch);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (mb_index, idx) in order.chunks(cfg.minibatch.max(1)).enumerate() {
            batch.clear();
            batch.extend(idx.iter().map(|&i| samples[i]));
            let loss = minibatch_loss_grads(model, &batch, cfg, &mut grads)?;
            if !loss.total.is_finite() {
                return Err(Error::NonFiniteLoss {
                    agent,
                    epoch,
                    minibatch: mb_index,
                });
            }
            let norm = apply_gradients(model, optimizer, &mut grads, cfg.max_grad_norm)?;
            stats.policy_loss += loss.policy;
            stats.value_loss += loss.value;
            stats.coop_value_loss += loss.coop_value;
            stats.entropy += loss.entropy;
            stats.mean_ratio += loss.mean_ratio;
            stats.clip_fraction += loss.clip_fraction;
            stats.approx_kl += loss.approx_kl;
            stats.grad_norm += norm;
            stats.minibatches += 1;
        }
    }
    let m = stats.minibatches.max(1) as f64;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.coop_value_loss /= m;
    stats.entropy /= m;
    stats.mean_ratio /= m;
    stats.clip_fraction /= m;
    stats.approx_kl /= m;
    stats.grad_norm /= m;
    stats.samples = n;
    Ok(stats)
}
