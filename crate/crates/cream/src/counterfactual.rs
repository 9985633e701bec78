//! Causal-effect arithmetic and counterfactual inference.
//!
//! At inference time the direct contribution of identifier names is removed
//! from the prediction: the three branch scores are combined as
//! `z_f + z_k + (1 - alpha) * z_t`, where `alpha` in `[0, 1]` controls the
//! degree of removal. At `alpha = 0` this equals three times the average
//! fusion used during training, so the argmax is identical.
//!
//! For a sample with no identifiers the naming branch has an empty input;
//! its score is replaced by the zero vector (a uniform score, which is the
//! only constant that cannot perturb the argmax).

use thiserror::Error;

use crate::dataset::CodeSample;
use crate::lexer::LexError;
use crate::model::{self, ModelError, ModelParams, Vocab};
use crate::train::TrainedModel;
use crate::views::{self, BranchViews};

#[derive(Debug, Error)]
pub enum InferError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), ModelError> {
    if a.len() != b.len() {
        return Err(ModelError::LogitShape {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Average fusion of the three branch scores: `(z_f + z_k + z_t) / 3`.
pub fn fuse(z_f: &[f64], z_k: &[f64], z_t: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_lengths(z_f, z_k)?;
    check_lengths(z_f, z_t)?;
    Ok(z_f
        .iter()
        .zip(z_k)
        .zip(z_t)
        .map(|((f, k), t)| (f + k + t) / 3.0)
        .collect())
}

/// Total effect: factual outcome minus fully-counterfactual outcome.
pub fn te(r_fact: &[f64], r_cf: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_lengths(r_fact, r_cf)?;
    Ok(r_fact.iter().zip(r_cf).map(|(a, b)| a - b).collect())
}

/// Natural direct effect: outcome with only the treatment active minus the
/// null outcome.
pub fn nde(r_t_only: &[f64], r_null: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_lengths(r_t_only, r_null)?;
    Ok(r_t_only.iter().zip(r_null).map(|(a, b)| a - b).collect())
}

/// Total indirect effect: `TE - NDE`.
pub fn tie(te_val: &[f64], nde_val: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_lengths(te_val, nde_val)?;
    Ok(te_val.iter().zip(nde_val).map(|(a, b)| a - b).collect())
}

/// The three views encoded as vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedViews {
    pub f: Vec<usize>,
    pub k: Vec<usize>,
    pub t: Vec<usize>,
}

impl EncodedViews {
    pub fn encode(views: &BranchViews, vocab: &Vocab) -> EncodedViews {
        EncodedViews {
            f: vocab.encode(&views.f_tokens),
            k: vocab.encode(&views.k_tokens),
            t: vocab.encode(&views.t_tokens),
        }
    }
}

/// Per-branch classification scores under one shared parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLogits {
    pub z_f: Vec<f64>,
    pub z_k: Vec<f64>,
    pub z_t: Vec<f64>,
}

/// Forwards each view through the shared model. An empty naming view yields
/// the zero (uniform) score vector.
pub fn branch_logits(params: &ModelParams, views: &EncodedViews) -> Result<BranchLogits, ModelError> {
    let z_f = model::forward(params, &views.f)?;
    let z_k = model::forward(params, &views.k)?;
    let z_t = if views.t.is_empty() {
        vec![0.0; params.classes()]
    } else {
        model::forward(params, &views.t)?
    };
    Ok(BranchLogits { z_f, z_k, z_t })
}

/// Counterfactual score `z_f + z_k + (1 - alpha) * z_t`.
pub fn cf_infer(params: &ModelParams, views: &EncodedViews, alpha: f64) -> Result<Vec<f64>, ModelError> {
    let logits = branch_logits(params, views)?;
    Ok(cf_combine(&logits, alpha))
}

/// The inference combination on already-computed branch scores.
pub fn cf_combine(logits: &BranchLogits, alpha: f64) -> Vec<f64> {
    logits
        .z_f
        .iter()
        .zip(&logits.z_k)
        .zip(&logits.z_t)
        .map(|((f, k), t)| f + k + (1.0 - alpha) * t)
        .collect()
}

/// Argmax with ties broken toward the lowest class index.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

/// Full prediction pipeline for one sample: tokenize, build views, encode,
/// score, argmax.
pub fn predict(model: &TrainedModel, sample: &CodeSample, alpha: f64) -> Result<usize, InferError> {
    let z = predict_scores(model, sample, alpha)?;
    Ok(argmax(&z))
}

/// The classification scores of the model's trained decision function.
///
/// A framework model scores with the counterfactual combination. A
/// combined-only model never trained the branch decomposition: it is the
/// conventional single-branch classifier, so it scores with its combined
/// branch alone and `alpha` has no effect.
pub fn predict_scores(
    model: &TrainedModel,
    sample: &CodeSample,
    alpha: f64,
) -> Result<Vec<f64>, InferError> {
    let views = views::views_for_source(&sample.code, model.config.max_len)?;
    let encoded = EncodedViews::encode(&views, &model.vocab);
    if model.config.combined_only {
        return Ok(model::forward(&model.params, &encoded.k)?);
    }
    Ok(cf_infer(&model.params, &encoded, alpha)?)
}
