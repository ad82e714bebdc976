//! Run configuration: input files, scoring thresholds, split, model and
//! search settings. Stored as JSON; relative paths resolve against the
//! directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CatalogSources, SplitProtocol, SplitRatios, DEFAULT_TAU_NEG};
use crate::eval::ReportSettings;
use crate::features::DEFAULT_LAMBDA1;
use crate::hyperopt::OptimizerSettings;
use crate::mlp::{MlpConfig, OptimizerKind};
use crate::rbscore::DEFAULT_TAU_SE;

/// Seeds the search is repeated over.
pub const DEFAULT_SEEDS: [u64; 5] = [13, 29, 47, 61, 83];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub drugs: PathBuf,
    pub embeddings: Vec<PathBuf>,
    pub profiles: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaffolds: Option<PathBuf>,
    pub pairs: PathBuf,
}

impl InputPaths {
    pub fn catalog_sources(&self) -> CatalogSources {
        CatalogSources {
            drugs: self.drugs.clone(),
            embeddings: self.embeddings.clone(),
            profiles: self.profiles.clone(),
            scaffolds: self.scaffolds.clone(),
        }
    }

    /// Every input file, in a fixed order.
    pub fn all(&self) -> Vec<&Path> {
        let mut v = vec![self.drugs.as_path()];
        v.extend(self.embeddings.iter().map(PathBuf::as_path));
        v.push(self.profiles.as_path());
        if let Some(s) = &self.scaffolds {
            v.push(s.as_path());
        }
        v.push(self.pairs.as_path());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSettings {
    pub protocol: SplitProtocol,
    pub ratios: SplitRatios,
    pub seed: u64,
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings {
            protocol: SplitProtocol::Random,
            ratios: SplitRatios::default(),
            seed: 13,
        }
    }
}

/// Field-wise overrides applied on top of the searched (or default) model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neurons_per_layer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ModelOverrides {
    pub fn apply(&self, base: &MlpConfig) -> MlpConfig {
        MlpConfig {
            hidden_layers: self.hidden_layers.unwrap_or(base.hidden_layers),
            neurons_per_layer: self.neurons_per_layer.unwrap_or(base.neurons_per_layer),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            dropout: self.dropout.unwrap_or(base.dropout),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            optimizer: self.optimizer.unwrap_or(base.optimizer),
            max_epochs: self.max_epochs.unwrap_or(base.max_epochs),
            patience: self.patience.unwrap_or(base.patience),
            seed: self.seed.unwrap_or(base.seed),
        }
    }
}

/// Training budget used inside fitness evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSettings {
    pub max_epochs: usize,
    pub patience: usize,
    /// Also search the fusion weight.
    pub tune_lambda1: bool,
    pub optimizer: OptimizerSettings,
    pub seeds: Vec<u64>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            max_epochs: 30,
            patience: 5,
            tune_lambda1: false,
            optimizer: OptimizerSettings::full(),
            seeds: DEFAULT_SEEDS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub output_dir: PathBuf,
    #[serde(default = "default_lambda1")]
    pub lambda1: f64,
    #[serde(default = "default_tau_se")]
    pub tau_se: f64,
    #[serde(default = "default_tau_neg")]
    pub tau_neg: f64,
    /// Append the clinical score to every input; off for the ablation.
    #[serde(default = "default_true")]
    pub use_rbscore: bool,
    #[serde(default)]
    pub split: SplitSettings,
    #[serde(default)]
    pub model: ModelOverrides,
    #[serde(default)]
    pub search: SearchSettings,
    #[serde(default)]
    pub evaluation: ReportSettings,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Build all feature rows up front instead of per batch; faster, but
    /// memory grows with the number of pairs.
    #[serde(default)]
    pub materialize: bool,
}

fn default_lambda1() -> f64 {
    DEFAULT_LAMBDA1
}
fn default_tau_se() -> f64 {
    DEFAULT_TAU_SE
}
fn default_tau_neg() -> f64 {
    DEFAULT_TAU_NEG
}
fn default_true() -> bool {
    true
}
fn default_top_k() -> usize {
    20
}

impl RunConfig {
    /// A configuration with every setting at its default.
    pub fn new(inputs: InputPaths, output_dir: PathBuf) -> Self {
        RunConfig {
            inputs,
            output_dir,
            lambda1: DEFAULT_LAMBDA1,
            tau_se: DEFAULT_TAU_SE,
            tau_neg: DEFAULT_TAU_NEG,
            use_rbscore: true,
            split: SplitSettings::default(),
            model: ModelOverrides::default(),
            search: SearchSettings::default(),
            evaluation: ReportSettings::default(),
            top_k: default_top_k(),
            materialize: false,
        }
    }

    /// Parses JSON; relative paths are resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, serde_json::Error> {
        let mut cfg: RunConfig = serde_json::from_str(text)?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_json(&text, base).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.inputs.drugs);
        self.inputs.embeddings.iter_mut().for_each(fix);
        fix(&mut self.inputs.profiles);
        if let Some(s) = self.inputs.scaffolds.as_mut() {
            fix(s);
        }
        fix(&mut self.inputs.pairs);
        fix(&mut self.output_dir);
    }

    /// Value checks that do not touch the file system.
    pub fn validate_values(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(0.0..=1.0).contains(&self.lambda1) {
            return bad(format!("lambda1 must lie in [0, 1], got {}", self.lambda1));
        }
        if !(0.0..=1.0).contains(&self.tau_se) {
            return bad(format!("tau_se must lie in [0, 1], got {}", self.tau_se));
        }
        if !(0.0..=1.0).contains(&self.tau_neg) {
            return bad(format!("tau_neg must lie in [0, 1], got {}", self.tau_neg));
        }
        if self.inputs.embeddings.is_empty() {
            return bad("at least one embedding file is required".into());
        }
        self.split
            .ratios
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.model
            .apply(&MlpConfig::default())
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.search
            .optimizer
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.search.seeds.is_empty() {
            return bad("search.seeds must not be empty".into());
        }
        if self.search.max_epochs == 0 || self.search.patience == 0 {
            return bad("search.max_epochs and search.patience must be at least 1".into());
        }
        let ev = &self.evaluation;
        if !(0.0..=1.0).contains(&ev.threshold) {
            return bad(format!("evaluation.threshold must lie in [0, 1], got {}", ev.threshold));
        }
        if ev.resamples < crate::eval::MIN_RESAMPLES {
            return bad(format!(
                "evaluation.resamples must be at least {}",
                crate::eval::MIN_RESAMPLES
            ));
        }
        if ev.ece_bins < 2 {
            return bad("evaluation.ece_bins must be at least 2".into());
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        Ok(())
    }

    /// Value checks plus existence of every input file.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_values()?;
        for path in self.inputs.all() {
            if !path.is_file() {
                return Err(ConfigError::Invalid(format!(
                    "input file {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "inputs": {
            "drugs": "drugs.csv",
            "embeddings": ["m.jsonl", "/abs/s.jsonl"],
            "profiles": "profiles.jsonl",
            "pairs": "pairs.csv"
        },
        "output_dir": "out"
    }"#;

    #[test]
    fn defaults_and_path_resolution() {
        let cfg = RunConfig::from_json(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(cfg.inputs.drugs, PathBuf::from("/data/drugs.csv"));
        assert_eq!(cfg.inputs.embeddings[1], PathBuf::from("/abs/s.jsonl"));
        assert_eq!(cfg.output_dir, PathBuf::from("/data/out"));
        assert_eq!(cfg.lambda1, 0.5);
        assert_eq!(cfg.search.seeds, DEFAULT_SEEDS.to_vec());
        assert_eq!(cfg.search.optimizer, OptimizerSettings::full());
        assert!(cfg.use_rbscore);
        cfg.validate_values().unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"output_dir\"", "\"lambda\": 0.3, \"output_dir\"");
        assert!(RunConfig::from_json(&text, Path::new(".")).is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::from_json(MINIMAL, Path::new("/data")).unwrap();
        let back = RunConfig::from_json(&cfg.to_json(), Path::new("/elsewhere")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_apply_field_wise() {
        let o = ModelOverrides {
            hidden_layers: Some(1),
            seed: Some(99),
            ..Default::default()
        };
        let c = o.apply(&MlpConfig::default());
        assert_eq!((c.hidden_layers, c.seed, c.neurons_per_layer), (1, 99, 192));
    }

    #[test]
    fn bad_values_are_reported() {
        let mut cfg = RunConfig::from_json(MINIMAL, Path::new("/data")).unwrap();
        cfg.tau_se = 1.5;
        assert!(cfg.validate_values().unwrap_err().to_string().contains("tau_se"));
        cfg.tau_se = 0.3;
        cfg.model.neurons_per_layer = Some(7);
        assert!(cfg.validate_values().is_err());
    }
}
