//! Per-vehicle policy and critic parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::AlgorithmVariant;
use crate::nn::{standard_layers, AdamConfig, AdamState, GaussianPolicy, Mlp, ACTION_DIM};
use crate::sim::OBS_DIM;
use crate::Result;

/// Policy plus critics for one vehicle. Parameters are never shared between vehicles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    pub variant: AlgorithmVariant,
    pub policy: GaussianPolicy,
    /// IPPO: own observation. MAPPO: own followed by the other's observation.
    /// PeMN: own observation, fitted to the self stream.
    pub value: Mlp,
    /// PeMN only: the other agent's observation, fitted to the cooperation stream.
    pub coop_value: Option<Mlp>,
}

/// Independent seed stream per `(seed, agent, role)`.
pub(crate) fn stream_seed(seed: u64, agent: usize, role: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(agent as u64 + 1))
        .wrapping_add(role.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl AgentModel {
    /// Seeded initialisation. The policy has its own seed stream, so its initial
    /// weights do not depend on the variant.
    pub fn new(variant: AlgorithmVariant, seed: u64, agent: usize) -> Result<Self> {
        let mut policy_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, agent, 0));
        let mut value_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, agent, 1));
        let mut coop_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, agent, 2));
        let policy = GaussianPolicy::new(Mlp::new(&standard_layers(OBS_DIM, ACTION_DIM), &mut policy_rng))?;
        let value_in = match variant {
            AlgorithmVariant::Mappo => 2 * OBS_DIM,
            _ => OBS_DIM,
        };
        let value = Mlp::new(&standard_layers(value_in, 1), &mut value_rng);
        let coop_value =
            (variant == AlgorithmVariant::Pemn).then(|| Mlp::new(&standard_layers(OBS_DIM, 1), &mut coop_rng));
        Ok(AgentModel {
            variant,
            policy,
            value,
            coop_value,
        })
    }

    /// Input of the main critic for this variant.
    pub fn value_input(&self, own: &[f64], other: &[f64]) -> Vec<f64> {
        match self.variant {
            AlgorithmVariant::Mappo => own.iter().chain(other).copied().collect(),
            _ => own.to_vec(),
        }
    }

    /// `(value_self, value_coop)`; the second is 0 outside PeMN.
    pub fn values(&self, own: &[f64], other: &[f64]) -> Result<(f64, f64)> {
        let v = self.value.forward(&self.value_input(own, other))?[0];
        let c = match &self.coop_value {
            Some(net) => net.forward(other)?[0],
            None => 0.0,
        };
        Ok((v, c))
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.mean_net.validate()?;
        self.value.validate()?;
        if let Some(c) = &self.coop_value {
            c.validate()?;
        }
        let expected_value_in = match self.variant {
            AlgorithmVariant::Mappo => 2 * OBS_DIM,
            _ => OBS_DIM,
        };
        if self.policy.obs_dim() != OBS_DIM {
            return Err(crate::Error::dims("policy input", OBS_DIM, self.policy.obs_dim()));
        }
        if self.value.input_size() != expected_value_in {
            return Err(crate::Error::dims(
                "critic input",
                expected_value_in,
                self.value.input_size(),
            ));
        }
        if (self.variant == AlgorithmVariant::Pemn) != self.coop_value.is_some() {
            return Err(crate::Error::VariantMismatch {
                operation: "cooperation critic",
                expected: "pemn",
            });
        }
        Ok(())
    }
}

/// Adam state for each network of an [`AgentModel`], applied in the order
/// policy, value, cooperation value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentOptimizer {
    pub policy: AdamState,
    pub value: AdamState,
    pub coop_value: Option<AdamState>,
}

impl AgentOptimizer {
    pub fn new(model: &AgentModel, lr: f64) -> Self {
        let cfg = AdamConfig {
            lr,
            ..AdamConfig::default()
        };
        AgentOptimizer {
            policy: AdamState::new(&model.policy.tensor_lens(), cfg),
            value: AdamState::new(&mlp_tensor_lens(&model.value), cfg),
            coop_value: model
                .coop_value
                .as_ref()
                .map(|c| AdamState::new(&mlp_tensor_lens(c), cfg)),
        }
    }
}

pub(crate) fn mlp_tensor_lens(net: &Mlp) -> Vec<usize> {
    net.weights()
        .iter()
        .zip(net.biases())
        .flat_map(|(w, b)| [w.data().len(), b.len()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critic_shapes_per_variant() {
        let ippo = AgentModel::new(AlgorithmVariant::Ippo, 1, 0).unwrap();
        let mappo = AgentModel::new(AlgorithmVariant::Mappo, 1, 0).unwrap();
        let pemn = AgentModel::new(AlgorithmVariant::Pemn, 1, 0).unwrap();
        assert_eq!(ippo.value.input_size(), OBS_DIM);
        assert_eq!(mappo.value.input_size(), 2 * OBS_DIM);
        assert!(ippo.coop_value.is_none() && mappo.coop_value.is_none());
        assert_eq!(pemn.coop_value.as_ref().unwrap().input_size(), OBS_DIM);
        for m in [&ippo, &mappo, &pemn] {
            m.validate().unwrap();
        }
    }

    #[test]
    fn policy_init_is_variant_independent() {
        let a = AgentModel::new(AlgorithmVariant::Ippo, 7, 1).unwrap();
        let b = AgentModel::new(AlgorithmVariant::Pemn, 7, 1).unwrap();
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.value, b.value);
        let other_agent = AgentModel::new(AlgorithmVariant::Pemn, 7, 0).unwrap();
        assert_ne!(other_agent.policy, b.policy);
    }

    #[test]
    fn coop_value_is_zero_outside_pemn() {
        let m = AgentModel::new(AlgorithmVariant::Mappo, 3, 0).unwrap();
        let (_, c) = m.values(&[0.1; OBS_DIM], &[0.2; OBS_DIM]).unwrap();
        assert_eq!(c, 0.0);
    }
}
