use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::reward::PersonalityParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmVariant {
    /// One critic per agent on its own observation.
    Ippo,
    /// One critic per agent on the concatenated observations of both agents.
    Mappo,
    /// Two critics per agent: self value on its own observation, cooperation
    /// value on the other agent's observation.
    Pemn,
}

impl AlgorithmVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmVariant::Ippo => "ippo",
            AlgorithmVariant::Mappo => "mappo",
            AlgorithmVariant::Pemn => "pemn",
        }
    }
}

impl fmt::Display for AlgorithmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ippo" => Ok(AlgorithmVariant::Ippo),
            "mappo" => Ok(AlgorithmVariant::Mappo),
            "pemn" => Ok(AlgorithmVariant::Pemn),
            other => Err(Error::config("variant", format!("unknown variant `{other}`"))),
        }
    }
}

/// Optimisation and rollout settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub lr: f64,
    /// Environment steps collected per update, summed over workers.
    pub rollout_steps: usize,
    pub epochs: usize,
    pub minibatch: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Global gradient-norm cap per network; 0 disables clipping.
    pub max_grad_norm: f64,
    pub workers: usize,
    pub seed: u64,
    pub variant: AlgorithmVariant,
    pub personalities: [PersonalityParams; 2],
    /// Environment-step budget for a training run.
    pub total_steps: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.9,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            lr: 1e-4,
            rollout_steps: 2048,
            epochs: 10,
            minibatch: 256,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            workers: 1,
            seed: 0,
            variant: AlgorithmVariant::Pemn,
            personalities: [PersonalityParams::selfish(); 2],
            total_steps: 300_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("train.gamma", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::config("train.gae_lambda", "must lie in [0, 1]"));
        }
        if !(self.clip_eps > 0.0) {
            return Err(Error::config("train.clip_eps", "must be positive"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("train.lr", "must be positive"));
        }
        if self.minibatch == 0 {
            return Err(Error::config("train.minibatch", "must be positive"));
        }
        if self.rollout_steps % self.minibatch != 0 {
            return Err(Error::config(
                "train.rollout_steps",
                "must be divisible by train.minibatch",
            ));
        }
        if self.workers == 0 {
            return Err(Error::config("train.workers", "must be at least 1"));
        }
        if self.rollout_steps % self.workers != 0 {
            return Err(Error::config(
                "train.rollout_steps",
                "must be divisible by train.workers",
            ));
        }
        if self.epochs == 0 {
            return Err(Error::config("train.epochs", "must be at least 1"));
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 || self.max_grad_norm < 0.0 {
            return Err(Error::config("train", "loss coefficients must be non-negative"));
        }
        Ok(())
    }

    /// Number of full updates that fit in `total_steps`.
    pub fn num_updates(&self) -> u64 {
        if self.rollout_steps == 0 {
            0
        } else {
            self.total_steps / self.rollout_steps as u64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = TrainConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.gamma, 0.9);
        assert_eq!(cfg.lr, 1e-4);
        assert_eq!(cfg.num_updates(), 146);
    }

    #[test]
    fn invalid_fields_are_named() {
        let cfg = TrainConfig {
            rollout_steps: 1000,
            ..TrainConfig::default()
        };
        match cfg.validate() {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "train.rollout_steps"),
            other => panic!("{other:?}"),
        }
        let cfg = TrainConfig {
            gamma: 1.0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("PeMN".parse::<AlgorithmVariant>().unwrap(), AlgorithmVariant::Pemn);
        assert!("mfpo".parse::<AlgorithmVariant>().is_err());
    }
}
