use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::{Error, Result};

/// Actions are `[steer, accel]`.
pub const ACTION_DIM: usize = 2;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const LOG_STD_INIT: f64 = -0.5;

/// Diagonal Gaussian policy with a state-independent standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    log_std: [f64; ACTION_DIM],
}

/// Log density of a diagonal Gaussian.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    let half_log_2pi = 0.5 * (2.0 * PI).ln();
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((&mu, &ls), &a)| {
            let z = (a - mu) * (-ls).exp();
            -0.5 * z * z - ls - half_log_2pi
        })
        .sum()
}

impl GaussianPolicy {
    pub fn new(mean_net: Mlp) -> Result<Self> {
        Self::with_log_std(mean_net, [LOG_STD_INIT; ACTION_DIM])
    }

    pub fn with_log_std(mean_net: Mlp, log_std: [f64; ACTION_DIM]) -> Result<Self> {
        if mean_net.output_size() != ACTION_DIM {
            return Err(Error::dims(
                "GaussianPolicy mean head",
                ACTION_DIM,
                mean_net.output_size(),
            ));
        }
        let mut policy = GaussianPolicy { mean_net, log_std };
        policy.clamp_log_std();
        Ok(policy)
    }

    pub fn obs_dim(&self) -> usize {
        self.mean_net.input_size()
    }

    pub fn log_std(&self) -> [f64; ACTION_DIM] {
        self.log_std
    }

    pub fn log_std_mut(&mut self) -> &mut [f64; ACTION_DIM] {
        &mut self.log_std
    }

    /// Keeps `log_std` within `[LOG_STD_MIN, LOG_STD_MAX]`; call after every update.
    pub fn clamp_log_std(&mut self) {
        for ls in &mut self.log_std {
            *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn mean(&self, obs: &[f64]) -> Result<[f64; ACTION_DIM]> {
        let out = self.mean_net.forward(obs)?;
        Ok([out[0], out[1]])
    }

    /// Log-probability of a raw (unclamped) action.
    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != ACTION_DIM {
            return Err(Error::dims("GaussianPolicy::log_prob action", ACTION_DIM, action.len()));
        }
        let mean = self.mean(obs)?;
        Ok(gaussian_log_prob(&mean, &self.log_std, action))
    }

    /// Draws `mean + exp(log_std) * z`, returning the raw action and its log-probability.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<([f64; ACTION_DIM], f64)> {
        let mean = self.mean(obs)?;
        let mut action = [0.0; ACTION_DIM];
        for k in 0..ACTION_DIM {
            let z: f64 = rng.sample(StandardNormal);
            action[k] = mean[k] + self.log_std[k].exp() * z;
        }
        let logp = gaussian_log_prob(&mean, &self.log_std, &action);
        Ok((action, logp))
    }

    pub fn entropy(&self) -> f64 {
        let c = 0.5 * (2.0 * PI * std::f64::consts::E).ln();
        self.log_std.iter().map(|ls| ls + c).sum()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.mean_net.tensors_mut();
        t.push(&mut self.log_std[..]);
        t
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = self.mean_net.tensor_names();
        names.push("log_std".to_string());
        names
    }

    pub fn tensor_lens(&self) -> Vec<usize> {
        let mut lens: Vec<usize> = self
            .mean_net
            .weights()
            .iter()
            .zip(self.mean_net.biases())
            .flat_map(|(w, b)| [w.data().len(), b.len()])
            .collect();
        lens.push(ACTION_DIM);
        lens
    }
}
