//! Generalized advantage estimation, per stream and decomposed.

use crate::{Error, Result};

/// Advantages and return targets (`advantage + value`) for one trajectory slice.
///
/// `bootstrap` is the value of the state after the last transition (0 when that
/// transition ended the episode). A `done` flag cuts both the bootstrap and the
/// advantage recursion at that step.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap: f64,
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n {
        return Err(Error::dims("compute_gae values", n, values.len()));
    }
    if dones.len() != n {
        return Err(Error::dims("compute_gae dones", n, dones.len()));
    }
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * live * next_value - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Per-stream GAE results for a decomposed critic.
#[derive(Clone, Debug, PartialEq)]
pub struct DecomposedGae {
    pub advantages: Vec<f64>,
    pub self_advantages: Vec<f64>,
    pub coop_advantages: Vec<f64>,
    pub self_returns: Vec<f64>,
    pub coop_returns: Vec<f64>,
}

/// Sum of the self-stream and cooperation-stream advantages.
///
/// GAE is linear in `(rewards, values)`, so this equals GAE of the summed
/// reward against the summed value estimate.
#[allow(clippy::too_many_arguments)]
pub fn decomposed_gae(
    self_rewards: &[f64],
    self_values: &[f64],
    self_bootstrap: f64,
    coop_rewards: &[f64],
    coop_values: &[f64],
    coop_bootstrap: f64,
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<DecomposedGae> {
    let (a_s, r_s) = compute_gae(self_rewards, self_values, self_bootstrap, dones, gamma, lambda)?;
    let (a_c, r_c) = compute_gae(coop_rewards, coop_values, coop_bootstrap, dones, gamma, lambda)?;
    Ok(DecomposedGae {
        advantages: a_s.iter().zip(&a_c).map(|(x, y)| x + y).collect(),
        self_advantages: a_s,
        coop_advantages: a_c,
        self_returns: r_s,
        coop_returns: r_c,
    })
}

/// Scales to zero mean and unit (population) standard deviation; std is floored at 1e-8.
pub fn normalize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    values.iter_mut().for_each(|v| *v = (*v - mean) / std);
}
