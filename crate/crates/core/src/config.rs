//! Run configuration as one JSON document. Every field has a default, so
//! `{}` is a valid configuration and reproduces the reference benchmark.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::BenchmarkConfig;
use crate::sourcegen::{GridSpec, SyntheticTargetConfig};
use crate::svr::{GridSearch, SvrParams};
use crate::transfer::Loss;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Target (experiment) grid.
    pub target_grid: GridSpec,
    /// Source pool grid per height.
    pub source_grid: GridSpec,
    /// Filament diameter, mm.
    pub filament_diameter: f64,
    /// Synthetic fixture; `None` picks the per-height default.
    pub synthetic: Option<SyntheticTargetConfig>,
    /// Fixed SVR hyperparameters; `None` runs the grid search.
    pub svr: Option<SvrParams>,
    pub search: GridSearch,
    pub n_iterations: usize,
    pub loss: Loss,
    pub benchmark: BenchmarkConfig,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target_grid: GridSpec::default(),
            source_grid: GridSpec::source_pool(),
            filament_diameter: 1.75,
            synthetic: None,
            svr: None,
            search: GridSearch::default(),
            n_iterations: 30,
            loss: Loss::Linear,
            benchmark: BenchmarkConfig::default(),
            seed: None,
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn synthetic_for(&self, h: f64) -> SyntheticTargetConfig {
        self.synthetic.unwrap_or_else(|| SyntheticTargetConfig::for_height(h))
    }
}
