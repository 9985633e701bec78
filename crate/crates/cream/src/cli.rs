//! Experiment commands: dataset generation, training, evaluation, sweeps
//! and attacks, all driven by one [`ExperimentConfig`].
//!
//! Artifacts live in the configured output directory:
//!
//! * `train.jsonl`, `valid.jsonl`, `test.jsonl`, `test_transformed.jsonl`,
//!   `manifest.json` — written by `gen`;
//! * `checkpoint.bin`, `train_log.csv` — written by `train`;
//! * `report.json` — written by `eval`;
//! * `sweep.csv` — written by `sweep`;
//! * `attack.json` — written by `attack`.
//!
//! Every command is deterministic given the resolved config: one root seed
//! drives generation (`seed ^ 1`), training (`seed ^ 2`), the transform
//! (`seed ^ 3`) and the attack (`seed ^ 4`).
//!
//! Exit codes: 0 success, 2 config/validation error, 3 i/o error,
//! 4 numeric failure.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::checkpoint::{self, CheckpointError};
use crate::config::ExperimentConfig;
use crate::dataset::{self, CodeSample, DatasetError};
use crate::eval::{self, EvalError};
use crate::rng::{STREAM_ATTACK, STREAM_TRANSFORM};
use crate::synthgen::{self, SpecError};
use crate::train::{self, EpochRecord, TrainError, TrainObserver, TrainedModel};
use crate::views::{self, ViewError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ViewError> for CliError {
    fn from(e: ViewError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFiniteLoss { .. } | TrainError::Model(_) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// File names under the output directory.
pub mod files {
    pub const TRAIN: &str = "train.jsonl";
    pub const VALID: &str = "valid.jsonl";
    pub const TEST: &str = "test.jsonl";
    pub const TEST_TRANSFORMED: &str = "test_transformed.jsonl";
    pub const MANIFEST: &str = "manifest.json";
    pub const CHECKPOINT: &str = "checkpoint.bin";
    pub const TRAIN_LOG: &str = "train_log.csv";
    pub const REPORT: &str = "report.json";
    pub const SWEEP: &str = "sweep.csv";
    pub const ATTACK: &str = "attack.json";
}

fn out_path(config: &ExperimentConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    config_digest: String,
    renames: Vec<ManifestRename>,
}

#[derive(Serialize)]
struct ManifestRename {
    id: String,
    map: BTreeMap<String, String>,
}

/// The unified evaluation report.
#[derive(Serialize)]
pub struct ReportJson {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub acc_original: f64,
    pub acc_transformed: f64,
    pub gap: f64,
    pub asr: Option<f64>,
    pub config_digest: String,
}

#[derive(Serialize)]
struct AttackJson {
    n_attacked: usize,
    n_flipped: usize,
    asr: Option<f64>,
    config_digest: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Generates the three splits plus the transformed test set and a manifest
/// recording the seed and every rename map.
pub fn cmd_gen(config: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| io_err(&config.out_dir, e))?;
    let data = synthgen::generate_dataset(&config.gen)?;
    dataset::write_jsonl(&out_path(config, files::TRAIN), &data.train)?;
    dataset::write_jsonl(&out_path(config, files::VALID), &data.valid)?;
    dataset::write_jsonl(&out_path(config, files::TEST), &data.test)?;

    let (transformed, renames) = if data.test.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let pool = views::identifier_pool(&data.train)?;
        let out = views::build_transformed_set(
            &data.test,
            &pool,
            config.seed() ^ STREAM_TRANSFORM,
        )?;
        let renames = data
            .test
            .iter()
            .zip(&out.maps)
            .map(|(sample, map)| ManifestRename {
                id: sample.id.clone(),
                map: map.mapping.clone(),
            })
            .collect();
        (out.samples, renames)
    };
    dataset::write_jsonl(&out_path(config, files::TEST_TRANSFORMED), &transformed)?;

    let manifest = Manifest {
        seed: config.seed(),
        config_digest: config.digest(),
        renames,
    };
    write_json(&out_path(config, files::MANIFEST), &manifest)
}

struct CsvLogger {
    file: File,
}

impl CsvLogger {
    fn create(path: &Path) -> Result<CsvLogger, CliError> {
        let mut file = File::create(path).map_err(|e| io_err(path, e))?;
        file.write_all(b"epoch,mean_loss_f,mean_loss_r,mean_loss_t,valid_accuracy\n")
            .map_err(|e| io_err(path, e))?;
        Ok(CsvLogger { file })
    }
}

impl TrainObserver for CsvLogger {
    fn on_epoch(&mut self, r: &EpochRecord) {
        let valid = r
            .valid_accuracy
            .map(|a| a.to_string())
            .unwrap_or_default();
        // Rows are flushed as they come so a failed run keeps its partial log.
        let _ = writeln!(
            self.file,
            "{},{},{},{},{}",
            r.epoch, r.mean_l_f, r.mean_l_r, r.mean_l_t, valid
        );
        let _ = self.file.flush();
    }
}

fn read_split(config: &ExperimentConfig, name: &str) -> Result<Vec<CodeSample>, CliError> {
    Ok(dataset::read_jsonl(&out_path(config, name))?)
}

fn validate_labels(samples: &[CodeSample], n_classes: usize) -> Result<(), CliError> {
    for s in samples {
        if s.label >= n_classes {
            return Err(CliError::Validation(format!(
                "sample {:?} has label {} but n_classes = {n_classes}",
                s.id, s.label
            )));
        }
    }
    Ok(())
}

/// Trains on the generated splits, streaming the per-epoch log, and saves
/// the checkpoint.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainedModel, CliError> {
    let train_set = read_split(config, files::TRAIN)?;
    let valid_set = read_split(config, files::VALID)?;
    validate_labels(&train_set, config.gen.n_classes)?;
    validate_labels(&valid_set, config.gen.n_classes)?;

    let mut logger = CsvLogger::create(&out_path(config, files::TRAIN_LOG))?;
    let outcome = train::train_with_observer(&train_set, &valid_set, &config.train, &mut logger)?;
    checkpoint::save(&outcome.model, &out_path(config, files::CHECKPOINT))?;
    Ok(outcome.model)
}

/// Evaluates the checkpoint on the original and transformed test sets and
/// writes the unified report.
pub fn cmd_eval(config: &ExperimentConfig) -> Result<ReportJson, CliError> {
    let model = checkpoint::load(&out_path(config, files::CHECKPOINT))?;
    let test = read_split(config, files::TEST)?;
    let transformed = read_split(config, files::TEST_TRANSFORMED)?;

    let alpha = config.train.alpha;
    let metrics = eval::evaluate(&model, &test, alpha, config.workers)?;
    let rob = eval::robustness(&model, &test, &transformed, alpha, config.workers)?;
    let report = ReportJson {
        accuracy: metrics.accuracy,
        macro_f1: metrics.macro_f1,
        per_class_f1: metrics.per_class_f1,
        acc_original: rob.acc_original,
        acc_transformed: rob.acc_transformed,
        gap: rob.gap,
        asr: None,
        config_digest: config.digest(),
    };
    write_json(&out_path(config, files::REPORT), &report)?;
    Ok(report)
}

/// One sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub fusion_fraction: f64,
    pub acc_original: f64,
    pub acc_transformed: f64,
}

/// Trains one model per fusion fraction (alpha affects inference only, so
/// checkpoints are reused across the alpha column) and evaluates every grid
/// cell on the original and transformed test sets.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    let train_set = read_split(config, files::TRAIN)?;
    let valid_set = read_split(config, files::VALID)?;
    let test = read_split(config, files::TEST)?;
    let transformed = read_split(config, files::TEST_TRANSFORMED)?;

    let mut rows = Vec::new();
    for &fusion_fraction in &config.fusion_sweep {
        let train_config = train::TrainConfig {
            fusion_fraction,
            ..config.train.clone()
        };
        let outcome = train::train(&train_set, &valid_set, &train_config)?;
        for &alpha in &config.alpha_sweep {
            let rob = eval::robustness(&outcome.model, &test, &transformed, alpha, config.workers)?;
            rows.push(SweepRow {
                alpha,
                fusion_fraction,
                acc_original: rob.acc_original,
                acc_transformed: rob.acc_transformed,
            });
        }
    }

    let path = out_path(config, files::SWEEP);
    let mut out = String::from("alpha,fusion_fraction,acc_original,acc_transformed\n");
    for row in &rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.alpha, row.fusion_fraction, row.acc_original, row.acc_transformed
        ));
    }
    std::fs::write(&path, out).map_err(|e| io_err(&path, e))?;
    Ok(rows)
}

/// Runs the greedy substitution attack against the checkpoint on the test
/// set, drawing candidates from the training-split identifier pool.
pub fn cmd_attack(config: &ExperimentConfig) -> Result<eval::AttackResult, CliError> {
    let model = checkpoint::load(&out_path(config, files::CHECKPOINT))?;
    let train_set = read_split(config, files::TRAIN)?;
    let test = read_split(config, files::TEST)?;
    let pool = views::identifier_pool(&train_set)?;
    let result = eval::attack_suite(
        &model,
        &test,
        &pool,
        config.attack_budget,
        config.train.alpha,
        config.seed() ^ STREAM_ATTACK,
        config.workers,
    )?;
    let json = AttackJson {
        n_attacked: result.n_attacked,
        n_flipped: result.n_flipped,
        asr: result.asr,
        config_digest: config.digest(),
    };
    write_json(&out_path(config, files::ATTACK), &json)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::default();
        config.set_seed(11);
        config.gen.n_train = 160;
        config.gen.n_valid = 40;
        config.gen.n_test = 40;
        config.train.epochs = 3;
        config.train.embed_dim = 8;
        config.out_dir = dir.to_path_buf();
        config
    }

    #[test]
    fn gen_train_eval_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config(dir.path());
        cmd_gen(&config).unwrap();
        for name in [files::TRAIN, files::VALID, files::TEST, files::TEST_TRANSFORMED] {
            assert!(out_path(&config, name).exists(), "{name} missing");
        }
        cmd_train(&config).unwrap();
        assert!(out_path(&config, files::CHECKPOINT).exists());
        let log = std::fs::read_to_string(out_path(&config, files::TRAIN_LOG)).unwrap();
        assert_eq!(log.lines().count(), 1 + config.train.epochs);
        let report = cmd_eval(&config).unwrap();
        assert!(report.accuracy > 0.0);
        assert!(out_path(&config, files::REPORT).exists());
    }

    #[test]
    fn gen_is_byte_identical_across_runs() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = small_config(dir_a.path());
        let b = small_config(dir_b.path());
        cmd_gen(&a).unwrap();
        cmd_gen(&b).unwrap();
        for name in [
            files::TRAIN,
            files::VALID,
            files::TEST,
            files::TEST_TRANSFORMED,
            files::MANIFEST,
        ] {
            let bytes_a = std::fs::read(out_path(&a, name)).unwrap();
            let bytes_b = std::fs::read(out_path(&b, name)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{name} differs across runs");
        }
    }

    #[test]
    fn gen_with_empty_test_split() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.gen.n_test = 0;
        cmd_gen(&config).unwrap();
        let transformed = std::fs::read_to_string(out_path(&config, files::TEST_TRANSFORMED)).unwrap();
        assert!(transformed.is_empty());
    }

    #[test]
    fn gen_rejects_invalid_rho() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.gen.rho = 1.5;
        let err = cmd_gen(&config).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("rho"));
    }

    #[test]
    fn train_without_datasets_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config(dir.path());
        let err = cmd_train(&config).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn checkpoint_reload_matches_in_memory_eval() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config(dir.path());
        cmd_gen(&config).unwrap();
        let model = cmd_train(&config).unwrap();
        let reloaded = checkpoint::load(&out_path(&config, files::CHECKPOINT)).unwrap();
        let test = read_split(&config, files::TEST).unwrap();
        let in_memory = eval::evaluate(&model, &test, 0.6, 1).unwrap();
        let from_disk = eval::evaluate(&reloaded, &test, 0.6, 1).unwrap();
        assert_eq!(in_memory, from_disk);
    }

    #[test]
    fn sweep_covers_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.alpha_sweep = vec![0.0, 0.8];
        config.fusion_sweep = vec![0.1];
        cmd_gen(&config).unwrap();
        let rows = cmd_sweep(&config).unwrap();
        assert_eq!(rows.len(), 2);
        let alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
        assert_eq!(alphas, vec![0.0, 0.8]);
        let csv = std::fs::read_to_string(out_path(&config, files::SWEEP)).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn attack_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.gen.n_test = 16;
        cmd_gen(&config).unwrap();
        cmd_train(&config).unwrap();
        let result = cmd_attack(&config).unwrap();
        let text = std::fs::read_to_string(out_path(&config, files::ATTACK)).unwrap();
        assert!(text.contains("n_attacked"));
        assert!(text.contains("config_digest"));
        if result.n_attacked == 0 {
            assert!(text.contains("\"asr\": null"));
        }
    }
}
