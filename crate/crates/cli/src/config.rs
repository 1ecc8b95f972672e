//! Experiment configuration. A single JSON document; every field except the
//! dataset has a default matching the standard training recipe, so a minimal
//! config names only the dataset:
//!
//! ```json
//! { "dataset": { "path": "data/pubmed" } }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sage_core::{RLConfig, SageConfig, SyntheticSpec};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Dataset directory in the on-disk format.
    Path(PathBuf),
    /// Generated planted-informative-neighbor graph.
    Synthetic(SyntheticSpec),
}

impl DatasetSource {
    /// Short label used in result rows.
    pub fn label(&self) -> String {
        match self {
            DatasetSource::Path(p) => p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            DatasetSource::Synthetic(spec) => format!(
                "synthetic-n{}-c{}-seed{}",
                spec.num_nodes, spec.num_communities, spec.seed
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    Uniform,
    Rl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: SageConfig,
    #[serde(default)]
    pub rl: RLConfig,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerMode,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Record test-set prediction wall time in the report. Timing is
    /// inherently nondeterministic; disable it when byte-identical report
    /// files matter more than the Time column.
    #[serde(default = "default_true")]
    pub measure_time: bool,
}

fn default_sampler() -> SamplerMode {
    SamplerMode::Rl
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seed list must not be empty".into()));
        }
        self.model
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.rl
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }
}
