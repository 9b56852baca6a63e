//! Pipeline configuration file: a single JSON document with nested
//! sections for the dataset, partitioning, per-partition generators, the
//! join, the validator, evaluation, and seeding.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dgm_core::csv_io::{read_schema_file, SchemaFile};
use dgm_core::generate::GeneratorConfig;
use dgm_core::join::{JoinConfig, JoinStrategy};
use dgm_core::validator::ValidatorBackend;

/// Configuration problems exit with code 2; anything failing later exits 3.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub dataset: DatasetSection,
    pub partition: PartitionSection,
    /// One generator per partition, in partition order.
    pub generators: Vec<GeneratorConfig>,
    pub join: JoinSection,
    #[serde(default)]
    pub validator: ValidatorSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub seeds: SeedsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSection {
    pub csv: PathBuf,
    pub schema: PathBuf,
    pub holdout_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PartitionSection {
    Random { n_p: usize },
    Correlation,
    Explicit { parts: Vec<Vec<String>> },
}

impl PartitionSection {
    /// Partition count implied by the mode.
    pub fn n_p(&self) -> usize {
        match self {
            PartitionSection::Random { n_p } => *n_p,
            PartitionSection::Correlation => 2,
            PartitionSection::Explicit { parts } => parts.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JoinSection {
    pub strategy: JoinStrategy,
    /// Output rows; defaults to the training-set size when unset.
    #[serde(default)]
    pub target_size: Option<usize>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_auto_accept")]
    pub auto_accept_fraction: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_early_stop")]
    pub early_stop_rounds: usize,
}

fn default_auto_accept() -> f64 {
    0.10
}

fn default_decay() -> f64 {
    0.02
}

fn default_max_iters() -> usize {
    200
}

fn default_early_stop() -> usize {
    20
}

impl JoinSection {
    pub fn to_join_config(&self, train_size: usize) -> JoinConfig {
        JoinConfig {
            strategy: self.strategy,
            target_size: self.target_size.unwrap_or(train_size),
            theta: self.theta,
            auto_accept_fraction: self.auto_accept_fraction,
            decay: self.decay,
            max_iters: self.max_iters,
            early_stop_rounds: self.early_stop_rounds,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidatorSection {
    pub backend: ValidatorBackend,
    pub grid: GridPreset,
}

impl Default for ValidatorSection {
    fn default() -> Self {
        Self {
            backend: ValidatorBackend::RandomForest,
            grid: GridPreset::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPreset {
    Full,
    Degraded,
}

impl GridPreset {
    pub fn grid(self) -> dgm_core::validator::HyperparameterGrid {
        match self {
            GridPreset::Full => dgm_core::validator::HyperparameterGrid::full(),
            GridPreset::Degraded => dgm_core::validator::HyperparameterGrid::degraded(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub label_column: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedsSection {
    pub master: u64,
    pub repeats: usize,
}

impl Default for SeedsSection {
    fn default() -> Self {
        Self {
            master: 0,
            repeats: 1,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.as_ref().display())))?;
        let config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("cannot parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Structural checks plus cross-checks against the schema sidecar.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dataset.holdout_fraction > 0.0 && self.dataset.holdout_fraction < 1.0) {
            return Err(ConfigError(format!(
                "dataset.holdout_fraction must lie in (0,1), got {}",
                self.dataset.holdout_fraction
            )));
        }
        let n_p = self.partition.n_p();
        if n_p == 0 {
            return Err(ConfigError("partition count must be >= 1".into()));
        }
        if self.generators.len() != n_p {
            return Err(ConfigError(format!(
                "{} generators configured for {n_p} partitions; counts must match",
                self.generators.len()
            )));
        }
        for (p, g) in self.generators.iter().enumerate() {
            g.validate()
                .map_err(|e| ConfigError(format!("generators[{p}]: {e}")))?;
        }
        if self.join.strategy == JoinStrategy::Validated {
            let factors: Vec<f64> = self.generators.iter().map(|g| g.oversample_factor).collect();
            if factors.windows(2).any(|w| w[0] != w[1]) {
                return Err(ConfigError(
                    "validated joining needs equal oversample_factor on every generator \
                     (the pools must have one row count)"
                        .into(),
                ));
            }
        }
        self.join
            .to_join_config(1)
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.seeds.repeats < 1 {
            return Err(ConfigError("seeds.repeats must be >= 1".into()));
        }

        // Referenced columns must exist in the schema sidecar, when present.
        match read_schema_file(&self.dataset.schema) {
            Ok(schema) => self.check_columns(&schema)?,
            Err(e) => {
                return Err(ConfigError(format!(
                    "cannot read schema sidecar {}: {e}",
                    self.dataset.schema.display()
                )))
            }
        }
        Ok(())
    }

    fn check_columns(&self, schema: &SchemaFile) -> Result<(), ConfigError> {
        if let Some(label) = &self.eval.label_column {
            if !schema.contains_key(label) {
                return Err(ConfigError(format!(
                    "eval.label_column {label:?} is not a schema column"
                )));
            }
        }
        if let PartitionSection::Explicit { parts } = &self.partition {
            let mut seen = std::collections::HashSet::new();
            for (p, group) in parts.iter().enumerate() {
                if group.is_empty() {
                    return Err(ConfigError(format!("partition.parts[{p}] is empty")));
                }
                for name in group {
                    if !schema.contains_key(name) {
                        return Err(ConfigError(format!(
                            "partition.parts[{p}] references unknown column {name:?}"
                        )));
                    }
                    if !seen.insert(name.clone()) {
                        return Err(ConfigError(format!(
                            "column {name:?} assigned to more than one partition"
                        )));
                    }
                }
            }
            for name in schema.keys() {
                if !seen.contains(name) {
                    return Err(ConfigError(format!(
                        "column {name:?} is not assigned to any partition"
                    )));
                }
            }
        }
        if let PartitionSection::Random { n_p } = &self.partition {
            if *n_p > schema.len() {
                return Err(ConfigError(format!(
                    "partition.n_p = {n_p} exceeds the {} schema columns",
                    schema.len()
                )));
            }
        }
        Ok(())
    }

    /// Stable content hash of the resolved config, for the run manifest.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).unwrap_or_default();
        let mut hash = 0xcbf29ce484222325u64;
        for byte in canonical.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}
