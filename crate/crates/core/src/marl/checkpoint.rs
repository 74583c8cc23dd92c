//! Versioned JSON checkpoints, one file per agent.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::agent::{mlp_tensor_lens, AgentModel, AgentOptimizer};
use super::config::TrainConfig;
use super::rollout::EnvSpec;
use crate::reward::PersonalityParams;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub agent: usize,
    pub personality: PersonalityParams,
    pub train: TrainConfig,
    pub scenario: EnvSpec,
    pub update: u64,
    pub env_steps: u64,
    pub model: AgentModel,
    pub optimizer: AgentOptimizer,
}

impl Checkpoint {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let load_err = |reason: String| Error::Load {
            path: path.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| load_err(e.to_string()))?;
        ckpt.validate().map_err(|e| load_err(e.to_string()))?;
        Ok(ckpt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != Self::FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("expected {}, found {}", Self::FORMAT_VERSION, self.format_version),
            ));
        }
        if self.model.variant != self.train.variant {
            return Err(Error::config("model.variant", "does not match train.variant"));
        }
        self.model.validate()?;
        let opt = &self.optimizer;
        let consistent = opt.policy.tensor_lens() == self.model.policy.tensor_lens()
            && opt.value.tensor_lens() == mlp_tensor_lens(&self.model.value)
            && match (&opt.coop_value, &self.model.coop_value) {
                (Some(o), Some(n)) => o.tensor_lens() == mlp_tensor_lens(n),
                (None, None) => true,
                _ => false,
            };
        if !consistent {
            return Err(Error::config("optimizer", "moment shapes do not match the model"));
        }
        Ok(())
    }
}
