//! Run configuration: grid, agent, iteration counts, and persistence paths.
//!
//! The on-disk form is TOML. A copy of the effective config is written into
//! every run directory so a run can be resumed from the directory alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Choice, GridSpec};
use crate::llm::client::RetryPolicy;
use crate::llm::mock::{MockPolicy, MockVerdictMode};
use crate::llm::Stage;
use crate::phenotype::{MixtureWeights, Phenotype};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("plays_per_game must be >= 1")]
    NoPlays,
    #[error("concurrency must be >= 1")]
    NoConcurrency,
    #[error(transparent)]
    Grid(#[from] crate::game::GridError),
    #[error(transparent)]
    Weights(#[from] crate::phenotype::MixtureError),
    #[error("nash agent x0 must lie in [0,1], got {0}")]
    BadX0(f64),
    #[error("llm agent with stage {stage} requires {field}")]
    MissingModel {
        stage: &'static str,
        field: &'static str,
    },
    #[error("unsupported config schema_version {0}")]
    Schema(u32),
}

/// A fixed per-cell choice for the scripted agent.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScriptedCell {
    pub s: i32,
    pub t: i32,
    pub choice: Choice,
}

/// Which agent plays the grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    /// Plays the analytic equilibrium prediction as a mixed strategy.
    Nash {
        #[serde(default = "default_x0")]
        x0: f64,
    },
    /// Plays one phenotype rule.
    Phenotype { phenotype: Phenotype },
    /// Draws a phenotype per play from the given population shares.
    Mixture { weights: MixtureWeights },
    /// Fixed choices from a lookup table.
    Scripted {
        default: Choice,
        #[serde(default)]
        table: Vec<ScriptedCell>,
    },
    /// A chat endpoint played through the staged pipeline.
    Llm {
        endpoint: String,
        model: String,
        stage: Stage,
        /// Endpoint for extraction calls; defaults to `endpoint`.
        #[serde(default)]
        extractor_endpoint: Option<String>,
        /// Model used to extract the short answer. Required for every
        /// stage beyond simple extraction.
        #[serde(default)]
        extractor_model: Option<String>,
        /// Endpoint for verifier calls; defaults to `endpoint`.
        #[serde(default)]
        verifier_endpoint: Option<String>,
        /// Model used as the logical verifier. Required for the verified
        /// stage.
        #[serde(default)]
        verifier_model: Option<String>,
        /// Name of the environment variable holding the bearer token.
        /// The token itself never appears in config or logs.
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout_s")]
        timeout_s: u64,
        #[serde(default)]
        retry: RetryPolicy,
    },
    /// The built-in scripted model suite: no network, same pipeline.
    Mock {
        generator: MockPolicy,
        #[serde(default = "default_mock_verdict")]
        verifier: MockVerdictMode,
        #[serde(default = "default_mock_stage")]
        stage: Stage,
    },
}

fn default_x0() -> f64 {
    0.5
}
fn default_timeout_s() -> u64 {
    120
}
fn default_mock_verdict() -> MockVerdictMode {
    MockVerdictMode::AlwaysGood
}
fn default_mock_stage() -> Stage {
    Stage::Verified
}

impl AgentSpec {
    /// Pipeline stage, for agents that have one.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            AgentSpec::Llm { stage, .. } | AgentSpec::Mock { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            AgentSpec::Nash { x0 } => {
                if !(0.0..=1.0).contains(x0) {
                    return Err(ConfigError::BadX0(*x0));
                }
            }
            AgentSpec::Mixture { weights } => weights.validate()?,
            AgentSpec::Llm {
                stage,
                extractor_model,
                verifier_model,
                ..
            } => {
                if *stage != Stage::Simple && extractor_model.is_none() {
                    return Err(ConfigError::MissingModel {
                        stage: stage.name(),
                        field: "extractor_model",
                    });
                }
                if *stage == Stage::Verified && verifier_model.is_none() {
                    return Err(ConfigError::MissingModel {
                        stage: stage.name(),
                        field: "verifier_model",
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Everything one experiment run needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    /// Master seed; every play derives its own stream from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_plays")]
    pub plays_per_game: u32,
    /// Maximum plays in flight within one round.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub out_dir: PathBuf,
    pub grid: GridSpec,
    pub agent: AgentSpec,
}

fn default_schema() -> u32 {
    1
}
fn default_plays() -> u32 {
    20
}
fn default_concurrency() -> usize {
    4
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != 1 {
            return Err(ConfigError::Schema(self.schema_version));
        }
        if self.plays_per_game < 1 {
            return Err(ConfigError::NoPlays);
        }
        if self.concurrency < 1 {
            return Err(ConfigError::NoConcurrency);
        }
        self.grid.validate()?;
        self.agent.validate()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        RunConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let text = toml::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text)?;
        Ok(())
    }
}
