//! Multi-task training with deferred fusion.
//!
//! Each iteration processes one sample through the three branches with one
//! shared parameter set:
//!
//! * score every view: `z_f`, `z_k`, `z_t`;
//! * before the fusion threshold, `z_r = z_k`; from the threshold on,
//!   `z_r = (z_f + z_k + z_t) / 3`;
//! * the update minimizes `L_total = L_f + L_r + L_t`, the cross-entropy of
//!   each branch score against the label.
//!
//! The fusion threshold is `floor(fusion_fraction * epochs * |train|)`
//! iterations. With `combined_only` set, only `L_r` with `z_r = z_k` is
//! trained, which is the conventional single-branch model used as the
//! robustness baseline.

use thiserror::Error;

use crate::counterfactual::{self, EncodedViews};
use crate::dataset::CodeSample;
use crate::lexer::LexError;
use crate::model::{self, Gradients, ModelError, ModelParams, Vocab};
use crate::rng::{SplitMix64, STREAM_SHUFFLE};
use crate::views;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Degree of removal of the naming branch at inference, in `[0, 1]`.
    pub alpha: f64,
    /// Fraction of total iterations trained before score fusion, in `[0, 1]`.
    pub fusion_fraction: f64,
    pub epochs: usize,
    pub lr: f64,
    /// Root seed; training derives its stream internally.
    pub seed: u64,
    pub embed_dim: usize,
    /// Token truncation length for every view.
    pub max_len: usize,
    /// Train only the combined branch (`L_total = L_r`, `z_r = z_k` always).
    pub combined_only: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.6,
            fusion_fraction: 0.10,
            epochs: 6,
            lr: 0.1,
            seed: 42,
            embed_dim: 32,
            max_len: 256,
            combined_only: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |field: &str, message: String| {
            Err(TrainError::InvalidConfig {
                field: field.to_string(),
                message,
            })
        };
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail("alpha", format!("must be in [0, 1], got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.fusion_fraction) {
            return fail(
                "fusion_fraction",
                format!("must be in [0, 1], got {}", self.fusion_fraction),
            );
        }
        if !(self.lr > 0.0) {
            return fail("lr", format!("must be positive, got {}", self.lr));
        }
        if self.embed_dim == 0 {
            return fail("embed_dim", "must be at least 1".to_string());
        }
        if self.max_len == 0 {
            return fail("max_len", "must be at least 1".to_string());
        }
        Ok(())
    }
}

/// The three per-branch losses of one iteration and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub l_f: f64,
    pub l_r: f64,
    pub l_t: f64,
    pub l_total: f64,
}

/// Per-iteration trace for observers.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// Global 0-based iteration index.
    pub index: usize,
    /// Whether the fusion schedule was active for this iteration.
    pub fused: bool,
    pub z_k: Vec<f64>,
    pub z_r: Vec<f64>,
    pub loss: LossRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub mean_l_f: f64,
    pub mean_l_r: f64,
    pub mean_l_t: f64,
    /// `None` when the validation set is empty.
    pub valid_accuracy: Option<f64>,
}

/// Training progress hooks. Both methods default to no-ops.
pub trait TrainObserver {
    fn on_iteration(&mut self, _record: &IterationRecord) {}
    fn on_epoch(&mut self, _record: &EpochRecord) {}
}

/// The no-op observer.
pub struct SilentObserver;

impl TrainObserver for SilentObserver {}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub vocab: Vocab,
    pub config: TrainConfig,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub log: Vec<EpochRecord>,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("invalid config field {field}: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("sample {id:?} does not lex: {source}")]
    Lex {
        id: String,
        #[source]
        source: LexError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite loss at epoch {epoch}, iteration {iteration}")]
    NonFiniteLoss { epoch: usize, iteration: usize },
}

struct EncodedSample {
    views: EncodedViews,
    label: usize,
}

fn encode_all(
    samples: &[CodeSample],
    vocab: &Vocab,
    max_len: usize,
) -> Result<Vec<EncodedSample>, TrainError> {
    samples
        .iter()
        .map(|sample| {
            let v = views::views_for_source(&sample.code, max_len).map_err(|source| {
                TrainError::Lex {
                    id: sample.id.clone(),
                    source,
                }
            })?;
            Ok(EncodedSample {
                views: EncodedViews::encode(&v, vocab),
                label: sample.label,
            })
        })
        .collect()
}

/// Trains with the default (silent) observer.
pub fn train(
    train_set: &[CodeSample],
    valid_set: &[CodeSample],
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    train_with_observer(train_set, valid_set, config, &mut SilentObserver)
}

/// Full training loop. Deterministic given the config: parameter init and
/// per-epoch shuffles consume one splitmix64 stream derived from
/// `config.seed`.
pub fn train_with_observer(
    train_set: &[CodeSample],
    valid_set: &[CodeSample],
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyDataset);
    }

    // Vocabulary from the training split, in first-occurrence order.
    let mut corpus: Vec<String> = Vec::new();
    for sample in train_set {
        let toks = crate::lexer::tokenize(&sample.code).map_err(|source| TrainError::Lex {
            id: sample.id.clone(),
            source,
        })?;
        corpus.extend(toks.tokens.into_iter().map(|t| t.text));
    }
    let vocab = Vocab::build(corpus.iter().map(String::as_str));

    let classes = train_set
        .iter()
        .chain(valid_set)
        .map(|s| s.label)
        .max()
        .unwrap_or(0)
        + 1;

    let encoded_train = encode_all(train_set, &vocab, config.max_len)?;
    let encoded_valid = encode_all(valid_set, &vocab, config.max_len)?;

    let mut rng = SplitMix64::stream(config.seed, STREAM_SHUFFLE);
    let mut params = ModelParams::init(vocab.len(), config.embed_dim, classes, &mut rng);

    let total_iterations = config.epochs * encoded_train.len();
    let fusion_start = (config.fusion_fraction * total_iterations as f64).floor() as usize;

    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..encoded_train.len()).collect();
    let mut iteration = 0usize;

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut sum_f = 0.0;
        let mut sum_r = 0.0;
        let mut sum_t = 0.0;

        for &sample_idx in &order {
            let sample = &encoded_train[sample_idx];
            let record = step(&mut params, sample, config, iteration, fusion_start)?;
            if !record.loss.l_total.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    iteration,
                });
            }
            sum_f += record.loss.l_f;
            sum_r += record.loss.l_r;
            sum_t += record.loss.l_t;
            observer.on_iteration(&record);
            iteration += 1;
        }

        let n = encoded_train.len() as f64;
        let valid_accuracy = validation_accuracy(&params, &encoded_valid, config.alpha)?;
        let epoch_record = EpochRecord {
            epoch,
            mean_l_f: sum_f / n,
            mean_l_r: sum_r / n,
            mean_l_t: sum_t / n,
            valid_accuracy,
        };
        observer.on_epoch(&epoch_record);
        log.push(epoch_record);
    }

    Ok(TrainOutcome {
        model: TrainedModel {
            params,
            vocab,
            config: config.clone(),
        },
        log,
    })
}

/// One sample update. Returns the iteration trace.
fn step(
    params: &mut ModelParams,
    sample: &EncodedSample,
    config: &TrainConfig,
    iteration: usize,
    fusion_start: usize,
) -> Result<IterationRecord, TrainError> {
    let label = sample.label;
    let views = &sample.views;

    let z_f = model::forward(params, &views.f)?;
    let z_k = model::forward(params, &views.k)?;
    let z_t = model::forward(params, &views.t)?;

    let fused = !config.combined_only && iteration >= fusion_start;
    let z_r = if fused {
        counterfactual::fuse(&z_f, &z_k, &z_t)?
    } else {
        z_k.clone()
    };

    let mut grads = Gradients::zeros(params);
    let (l_r, dz_r) = model::loss_and_logit_grad(&z_r, label)?;

    let loss = if config.combined_only {
        model::accumulate_gradients(params, &views.k, &dz_r, 1.0, &mut grads)?;
        LossRecord {
            l_f: 0.0,
            l_r,
            l_t: 0.0,
            l_total: l_r,
        }
    } else {
        let (l_f, dz_f) = model::loss_and_logit_grad(&z_f, label)?;
        let (l_t, dz_t) = model::loss_and_logit_grad(&z_t, label)?;
        model::accumulate_gradients(params, &views.f, &dz_f, 1.0, &mut grads)?;
        model::accumulate_gradients(params, &views.t, &dz_t, 1.0, &mut grads)?;
        if fused {
            // L_r reaches every branch through the average fusion.
            model::accumulate_gradients(params, &views.f, &dz_r, 1.0 / 3.0, &mut grads)?;
            model::accumulate_gradients(params, &views.k, &dz_r, 1.0 / 3.0, &mut grads)?;
            model::accumulate_gradients(params, &views.t, &dz_r, 1.0 / 3.0, &mut grads)?;
        } else {
            model::accumulate_gradients(params, &views.k, &dz_r, 1.0, &mut grads)?;
        }
        LossRecord {
            l_f,
            l_r,
            l_t,
            l_total: l_f + l_r + l_t,
        }
    };

    model::sgd_step(params, &grads, config.lr);

    Ok(IterationRecord {
        index: iteration,
        fused,
        z_k,
        z_r,
        loss,
    })
}

fn validation_accuracy(
    params: &ModelParams,
    valid: &[EncodedSample],
    alpha: f64,
) -> Result<Option<f64>, TrainError> {
    if valid.is_empty() {
        return Ok(None);
    }
    let mut correct = 0usize;
    for sample in valid {
        let z = counterfactual::cf_infer(params, &sample.views, alpha)?;
        if counterfactual::argmax(&z) == sample.label {
            correct += 1;
        }
    }
    Ok(Some(correct as f64 / valid.len() as f64))
}
