//! Run configuration: one TOML document with `[run]`, `[scenario]`, `[train]`
//! and `[reward]` tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::marl::{EnvSpec, TrainConfig};
use crate::reward::RewardConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    pub out: PathBuf,
    pub eval_episodes: usize,
    /// Seeds the evaluation scenarios, independent of the training seed.
    pub eval_seed: u64,
    /// Save checkpoints every this many updates; 0 saves only the initial and final ones.
    pub checkpoint_every: u64,
    /// Keep every evaluation episode in `episodes.jsonl` for later export.
    pub record_episodes: bool,
    /// Include per-step reward breakdowns in exported trajectories.
    pub verbose_rewards: bool,
    /// Frozen background checkpoints; when set only the left agent trains and the
    /// right vehicle is driven by one of these, picked per episode.
    pub backgrounds: Vec<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            out: PathBuf::from("runs/default"),
            eval_episodes: 100,
            eval_seed: 1_000_000,
            checkpoint_every: 0,
            record_episodes: true,
            verbose_rewards: false,
            backgrounds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub run: RunSection,
    pub scenario: EnvSpec,
    pub train: TrainConfig,
    pub reward: RewardConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.train.validate()?;
        self.reward.validate()?;
        if self.run.eval_episodes == 0 {
            return Err(Error::config("run.eval_episodes", "must be at least 1"));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::PersonalityParams;

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.train.personalities = [
            PersonalityParams::from_alpha(0.2).unwrap(),
            PersonalityParams::from_alpha(0.7).unwrap(),
        ];
        cfg.train.lr = 3.3e-4;
        cfg.scenario.level = 4;
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn fixed_scenario_survives_the_echo() {
        let mut cfg = RunConfig::default();
        cfg.scenario.fixed = Some(crate::sim::generate_scenario(5, 3).unwrap());
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let env = back.scenario.make_env(123).unwrap();
        assert_eq!(&env.scene().config, cfg.scenario.fixed.as_ref().unwrap());
    }

    #[test]
    fn partial_documents_use_defaults() {
        let cfg = RunConfig::from_toml("[scenario]\nlevel = 3\n[train]\nseed = 9\n").unwrap();
        assert_eq!(cfg.scenario.level, 3);
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.train.gamma, 0.9);
        assert_eq!(cfg.reward, RewardConfig::default());
    }

    #[test]
    fn bad_personality_is_rejected() {
        let text =
            "[[train.personalities]]\nalpha = 0.5\nbeta = 0.6\n[[train.personalities]]\nalpha = 1.0\nbeta = 0.0\n";
        assert!(RunConfig::from_toml(text).is_err());
    }
}
