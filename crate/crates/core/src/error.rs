use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite gradient in {layer}")]
    NonFiniteGradient { layer: String },

    #[error("non-finite loss for agent {agent} in epoch {epoch}, minibatch {minibatch}")]
    NonFiniteLoss {
        agent: usize,
        epoch: usize,
        minibatch: usize,
    },

    #[error("invalid personality (alpha={alpha}, beta={beta}): {reason}")]
    InvalidPersonality {
        alpha: f64,
        beta: f64,
        reason: &'static str,
    },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("difficulty level {0} out of range 1..=6")]
    InvalidLevel(u8),

    #[error("scenario generation failed (level {level}, seed {seed}) after {attempts} placement attempts")]
    ScenarioGeneration { level: u8, seed: u64, attempts: u32 },

    #[error("{operation} requires the {expected} variant")]
    VariantMismatch {
        operation: &'static str,
        expected: &'static str,
    },

    #[error("environment fault in worker {worker}, episode step {step}: {reason}")]
    EnvFault { worker: usize, step: u32, reason: String },

    #[error("failed to load {path}: {reason}")]
    Load { path: PathBuf, reason: String },

    #[error("episode {0} not found")]
    EpisodeNotFound(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
