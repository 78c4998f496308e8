//! Run configuration: one JSON file, environment overrides for paths, and a
//! couple of command-line overrides on top.
//!
//! Precedence, lowest to highest: built-in defaults, the `--config` file,
//! `CALLFORGE_*` environment variables (paths only), explicit flags such as
//! `--seed`. The hash recorded in stage manifests covers everything except
//! the paths section, so moving inputs between directories does not change
//! the hash while touching any behavioral knob does.

use std::env;
use std::path::{Path, PathBuf};

use callforge_core::hashing::sha256_hex;
use callforge_core::parser::ParseMode;
use callforge_core::serializer::SerializerConfig;
use callforge_core::splitter::StrataKey;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::formats::read_json;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub inventory: Option<PathBuf>,
    pub normalization_map: Option<PathBuf>,
    pub prune_plan: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSection {
    pub k: usize,
    pub epoch: u64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection { k: 5, epoch: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSection {
    pub ratios: [f64; 3],
    pub strata_keys: Vec<StrataKey>,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            ratios: [0.8, 0.1, 0.1],
            strata_keys: vec![StrataKey::Dialect, StrataKey::Domain],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationSection {
    pub mode: ParseMode,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection { mode: ParseMode::DeploymentAware }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub token_budget: usize,
    pub paths: Paths,
    pub sampler: SamplerSection,
    pub split: SplitSection,
    pub evaluation: EvaluationSection,
    pub serializer: SerializerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            token_budget: 2048,
            paths: Paths::default(),
            sampler: SamplerSection::default(),
            split: SplitSection::default(),
            evaluation: EvaluationSection::default(),
            serializer: SerializerConfig::default(),
        }
    }
}

fn env_path(var: &str) -> Option<PathBuf> {
    env::var_os(var).filter(|v| !v.is_empty()).map(PathBuf::from)
}

impl PipelineConfig {
    /// Loads the config file if given, then layers environment and flag
    /// overrides. Also validates the serializer token set once, up front.
    pub fn load(config_path: Option<&Path>, seed_override: Option<u64>) -> Result<Self> {
        let mut config = match config_path {
            Some(path) => read_json::<PipelineConfig>(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(p) = env_path("CALLFORGE_CORPUS") {
            config.paths.corpus = Some(p);
        }
        if let Some(p) = env_path("CALLFORGE_INVENTORY") {
            config.paths.inventory = Some(p);
        }
        if let Some(p) = env_path("CALLFORGE_NORMALIZATION_MAP") {
            config.paths.normalization_map = Some(p);
        }
        if let Some(p) = env_path("CALLFORGE_PRUNE_PLAN") {
            config.paths.prune_plan = Some(p);
        }
        if let Some(p) = env_path("CALLFORGE_PREDICTIONS") {
            config.paths.predictions = Some(p);
        }
        if let Some(p) = env_path("CALLFORGE_GOLD") {
            config.paths.gold = Some(p);
        }
        if let Some(p) = env_path("CALLFORGE_OUTPUT_DIR") {
            config.paths.output_dir = Some(p);
        }
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        config
            .serializer
            .validate()
            .map_err(|e| CliError::input(format!("serializer config: {e}")))?;
        Ok(config)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn require(path: &Option<PathBuf>, name: &str, var: &str) -> Result<PathBuf> {
        path.clone().ok_or_else(|| {
            CliError::input(format!(
                "no {name} path: set paths.{name} in the config file or {var}"
            ))
        })
    }

    pub fn corpus_path(&self) -> Result<PathBuf> {
        Self::require(&self.paths.corpus, "corpus", "CALLFORGE_CORPUS")
    }

    pub fn inventory_path(&self) -> Result<PathBuf> {
        Self::require(&self.paths.inventory, "inventory", "CALLFORGE_INVENTORY")
    }

    pub fn predictions_path(&self) -> Result<PathBuf> {
        Self::require(&self.paths.predictions, "predictions", "CALLFORGE_PREDICTIONS")
    }

    pub fn gold_path(&self) -> Result<PathBuf> {
        Self::require(&self.paths.gold, "gold", "CALLFORGE_GOLD")
    }

    /// Hash of every behavioral setting. Paths are excluded on purpose: they
    /// say where data lives, not what the run does.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config is plain data");
        if let Some(map) = value.as_object_mut() {
            map.remove("paths");
        }
        let canonical = serde_json::to_string(&value).expect("config is plain data");
        sha256_hex(canonical.as_bytes())
    }
}
