//! Experiment configuration: a flat `key = value` file.
//!
//! Lines starting with `#` (and blank lines) are ignored. Unknown keys are
//! rejected so typos surface immediately. Command-line overrides (seed,
//! workers, output directory) are applied after parsing; the config digest
//! covers the resolved values, so a report always identifies the exact
//! experiment that produced it.

use std::collections::BTreeMap;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::synthgen::GenSpec;
use crate::train::TrainConfig;

/// Attack budget covering every identifier of a sample.
pub const BUDGET_ALL: usize = usize::MAX;

/// Which samples contribute replacement identifiers for the transform and
/// the attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolSource {
    /// Identifiers of the training split (default).
    TrainSplit,
    /// Identifiers of all three splits.
    AllSplits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub gen: GenSpec,
    pub train: TrainConfig,
    /// Alpha values evaluated by the sweep command.
    pub alpha_sweep: Vec<f64>,
    /// Fusion fractions trained by the sweep command.
    pub fusion_sweep: Vec<f64>,
    /// Maximum committed substitutions per attacked sample.
    pub attack_budget: usize,
    /// Replacement-identifier pool for transform and attack.
    pub transform_pool: PoolSource,
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gen: GenSpec::default(),
            train: TrainConfig::default(),
            alpha_sweep: vec![0.0, 0.4, 0.5, 0.6, 0.7, 0.8],
            fusion_sweep: vec![0.10],
            attack_budget: BUDGET_ALL,
            transform_pool: PoolSource::TrainSplit,
            workers: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {key:?}")]
    UnknownKey { key: String },
    #[error("invalid value for {key}: {message}")]
    Value { key: String, message: String },
    #[error("config file {path}: {message}")]
    Io { path: String, message: String },
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| ConfigError::Value {
        key: key.to_string(),
        message: format!("{e} (got {value:?})"),
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|part| parse_value(key, part))
        .collect()
}

impl ExperimentConfig {
    /// Parses config text over the defaults.
    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut config = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => {
                let seed = parse_value(key, value)?;
                self.set_seed(seed);
            }
            "n_classes" => self.gen.n_classes = parse_value(key, value)?,
            "n_train" => self.gen.n_train = parse_value(key, value)?,
            "n_valid" => self.gen.n_valid = parse_value(key, value)?,
            "n_test" => self.gen.n_test = parse_value(key, value)?,
            "rho" => self.gen.rho = parse_value(key, value)?,
            "pool_size" => self.gen.pool_size = parse_value(key, value)?,
            "alpha" => self.train.alpha = parse_value(key, value)?,
            "fusion_fraction" => self.train.fusion_fraction = parse_value(key, value)?,
            "epochs" => self.train.epochs = parse_value(key, value)?,
            "lr" => self.train.lr = parse_value(key, value)?,
            "embed_dim" => self.train.embed_dim = parse_value(key, value)?,
            "max_len" => self.train.max_len = parse_value(key, value)?,
            "mode" => {
                self.train.combined_only = match value {
                    "cream" => false,
                    "combined-only" => true,
                    other => {
                        return Err(ConfigError::Value {
                            key: key.to_string(),
                            message: format!(
                                "expected `cream` or `combined-only`, got {other:?}"
                            ),
                        })
                    }
                }
            }
            "alpha_sweep" => self.alpha_sweep = parse_list(key, value)?,
            "fusion_sweep" => self.fusion_sweep = parse_list(key, value)?,
            "attack_budget" => {
                self.attack_budget = if value == "all" {
                    BUDGET_ALL
                } else {
                    parse_value(key, value)?
                }
            }
            "transform_pool" => {
                self.transform_pool = match value {
                    "train" => PoolSource::TrainSplit,
                    "all" => PoolSource::AllSplits,
                    other => {
                        return Err(ConfigError::Value {
                            key: key.to_string(),
                            message: format!("expected `train` or `all`, got {other:?}"),
                        })
                    }
                }
            }
            "workers" => self.workers = parse_value(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => {
                return Err(ConfigError::UnknownKey {
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    /// One root seed drives generation, training, transform and attack.
    pub fn set_seed(&mut self, seed: u64) {
        self.gen.seed = seed;
        self.train.seed = seed;
    }

    pub fn seed(&self) -> u64 {
        self.gen.seed
    }

    /// Canonical resolved form: sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        let mut entries: BTreeMap<&str, String> = BTreeMap::new();
        entries.insert("seed", self.seed().to_string());
        entries.insert("n_classes", self.gen.n_classes.to_string());
        entries.insert("n_train", self.gen.n_train.to_string());
        entries.insert("n_valid", self.gen.n_valid.to_string());
        entries.insert("n_test", self.gen.n_test.to_string());
        entries.insert("rho", self.gen.rho.to_string());
        entries.insert("pool_size", self.gen.pool_size.to_string());
        entries.insert("alpha", self.train.alpha.to_string());
        entries.insert("fusion_fraction", self.train.fusion_fraction.to_string());
        entries.insert("epochs", self.train.epochs.to_string());
        entries.insert("lr", self.train.lr.to_string());
        entries.insert("embed_dim", self.train.embed_dim.to_string());
        entries.insert("max_len", self.train.max_len.to_string());
        entries.insert(
            "mode",
            if self.train.combined_only {
                "combined-only".to_string()
            } else {
                "cream".to_string()
            },
        );
        let list = |xs: &[f64]| {
            xs.iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        entries.insert("alpha_sweep", list(&self.alpha_sweep));
        entries.insert("fusion_sweep", list(&self.fusion_sweep));
        entries.insert(
            "attack_budget",
            if self.attack_budget == BUDGET_ALL {
                "all".to_string()
            } else {
                self.attack_budget.to_string()
            },
        );
        entries.insert(
            "transform_pool",
            match self.transform_pool {
                PoolSource::TrainSplit => "train".to_string(),
                PoolSource::AllSplits => "all".to_string(),
            },
        );
        // workers and out_dir are excluded: results are independent of both.
        entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of the canonical resolved config, hex-encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let text = "\
# experiment
seed = 7
rho = 0.5
alpha = 0.4
mode = combined-only
alpha_sweep = 0.0, 0.5, 1.0
attack_budget = all
";
        let config = ExperimentConfig::parse(text).unwrap();
        assert_eq!(config.seed(), 7);
        assert_eq!(config.train.seed, 7);
        assert_eq!(config.gen.rho, 0.5);
        assert_eq!(config.train.alpha, 0.4);
        assert!(config.train.combined_only);
        assert_eq!(config.alpha_sweep, vec![0.0, 0.5, 1.0]);
        assert_eq!(config.attack_budget, BUDGET_ALL);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            ExperimentConfig::parse("rho_typo = 0.5"),
            Err(ConfigError::UnknownKey { .. })
        ));
    }

    #[test]
    fn bad_value_names_the_key() {
        match ExperimentConfig::parse("epochs = many") {
            Err(ConfigError::Value { key, .. }) => assert_eq!(key, "epochs"),
            other => panic!("expected value error, got {other:?}"),
        }
    }

    #[test]
    fn digest_reflects_resolved_values() {
        let mut a = ExperimentConfig::default();
        let b = ExperimentConfig::default();
        assert_eq!(a.digest(), b.digest());
        a.set_seed(99);
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn defaults_are_stable() {
        let config = ExperimentConfig::default();
        assert_eq!(config.gen.n_classes, 8);
        assert_eq!(config.gen.n_train, 2000);
        assert_eq!(config.train.alpha, 0.6);
        assert_eq!(config.train.fusion_fraction, 0.10);
    }
}
