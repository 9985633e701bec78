//! Metrics, original-vs-transformed robustness evaluation, and a greedy
//! identifier-substitution attack.
//!
//! Evaluation and the attack are embarrassingly parallel across samples: the
//! model is read-only and every sample owns a child random stream split by
//! its index, so results are identical for any worker count.

use rayon::prelude::*;
use thiserror::Error;

use crate::counterfactual::{self, InferError};
use crate::dataset::CodeSample;
use crate::lexer::{self, IdentifierSet, TokenList};
use crate::rng::{self, SplitMix64};
use crate::train::TrainedModel;
use crate::views::RenameMap;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class_f1: Vec<f64>,
    pub macro_f1: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub acc_original: f64,
    pub acc_transformed: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AttackResult {
    /// Initially-correct samples, the attack denominator.
    pub n_attacked: usize,
    /// Samples whose prediction flipped within budget.
    pub n_flipped: usize,
    /// `n_flipped / n_attacked`; `None` when nothing was attackable.
    pub asr: Option<f64>,
}

/// Attack trace for one sample.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub flipped: bool,
    /// Committed substitutions in order.
    pub substitutions: RenameMap,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("datasets are misaligned at index {index}: {left:?} vs {right:?}")]
    MisalignedSets {
        index: usize,
        left: String,
        right: String,
    },
    #[error("sample {id:?} has label {label} but the model has {classes} classes")]
    LabelOutOfRange {
        id: String,
        label: usize,
        classes: usize,
    },
    #[error(transparent)]
    Infer(#[from] InferError),
}

/// Candidate draws per identifier in the greedy attack.
pub const ATTACK_CANDIDATES: usize = 32;

/// Runs a closure inside a rayon pool of `workers` threads; `workers <= 1`
/// runs it on the current thread.
fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers <= 1 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(f)
    }
}

/// Aggregates accuracy and per-class F1 from aligned label/prediction pairs.
/// A class with zero precision and recall gets F1 = 0.
pub fn metrics_from_predictions(
    labels: &[usize],
    predictions: &[usize],
    n_classes: usize,
) -> MetricsReport {
    assert_eq!(labels.len(), predictions.len());
    let n = labels.len();
    let mut true_pos = vec![0usize; n_classes];
    let mut false_pos = vec![0usize; n_classes];
    let mut false_neg = vec![0usize; n_classes];
    let mut correct = 0usize;
    for (&label, &pred) in labels.iter().zip(predictions) {
        if label == pred {
            correct += 1;
            true_pos[label] += 1;
        } else {
            false_pos[pred] += 1;
            false_neg[label] += 1;
        }
    }
    let per_class_f1: Vec<f64> = (0..n_classes)
        .map(|c| {
            let denom = 2 * true_pos[c] + false_pos[c] + false_neg[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * true_pos[c] as f64 / denom as f64
            }
        })
        .collect();
    let macro_f1 = per_class_f1.iter().sum::<f64>() / n_classes.max(1) as f64;
    MetricsReport {
        accuracy: correct as f64 / n as f64,
        per_class_f1,
        macro_f1,
        n,
    }
}

fn predict_all(
    model: &TrainedModel,
    samples: &[CodeSample],
    alpha: f64,
    workers: usize,
) -> Result<Vec<usize>, EvalError> {
    with_workers(workers, || {
        samples
            .par_iter()
            .map(|s| counterfactual::predict(model, s, alpha).map_err(EvalError::from))
            .collect()
    })
}

/// Predicts every sample and aggregates metrics.
pub fn evaluate(
    model: &TrainedModel,
    samples: &[CodeSample],
    alpha: f64,
    workers: usize,
) -> Result<MetricsReport, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let classes = model.params.classes();
    if let Some(bad) = samples.iter().find(|s| s.label >= classes) {
        return Err(EvalError::LabelOutOfRange {
            id: bad.id.clone(),
            label: bad.label,
            classes,
        });
    }
    let predictions = predict_all(model, samples, alpha, workers)?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    Ok(metrics_from_predictions(
        &labels,
        &predictions,
        model.params.classes(),
    ))
}

/// Evaluates the aligned original and transformed sets and reports the
/// accuracy gap.
pub fn robustness(
    model: &TrainedModel,
    original: &[CodeSample],
    transformed: &[CodeSample],
    alpha: f64,
    workers: usize,
) -> Result<RobustnessReport, EvalError> {
    if original.len() != transformed.len() {
        return Err(EvalError::MisalignedSets {
            index: original.len().min(transformed.len()),
            left: format!("{} samples", original.len()),
            right: format!("{} samples", transformed.len()),
        });
    }
    for (index, (o, t)) in original.iter().zip(transformed).enumerate() {
        if o.id != t.id || o.label != t.label {
            return Err(EvalError::MisalignedSets {
                index,
                left: o.id.clone(),
                right: t.id.clone(),
            });
        }
    }
    let acc_original = evaluate(model, original, alpha, workers)?.accuracy;
    let acc_transformed = evaluate(model, transformed, alpha, workers)?.accuracy;
    Ok(RobustnessReport {
        acc_original,
        acc_transformed,
        gap: acc_original - acc_transformed,
    })
}

/// Margin of the correct class: `z[label] - max(z[c] for c != label)`.
/// Negative when the sample is misclassified.
fn margin(z: &[f64], label: usize) -> f64 {
    let best_other = z
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != label)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    z[label] - best_other
}

fn splice_rename(
    source: &str,
    toks: &TokenList,
    ids: &IdentifierSet,
    from: &str,
    to: &str,
) -> String {
    let mut out = String::with_capacity(source.len());
    let mut cursor = 0;
    for i in ids.iter() {
        let tok = &toks.tokens[i];
        if tok.text == from {
            out.push_str(&source[cursor..tok.span.start]);
            out.push_str(to);
            cursor = tok.span.end;
        }
    }
    out.push_str(&source[cursor..]);
    out
}

/// Greedy black-box substitution attack on one initially-correct sample.
///
/// Iterates the distinct identifiers in order of occurrence; for each, up to
/// [`ATTACK_CANDIDATES`] pool draws are tried and the first one that
/// strictly decreases the correct-class margin is committed. Stops as soon
/// as the prediction flips or `budget` substitutions have been committed.
pub fn attack_greedy(
    model: &TrainedModel,
    sample: &CodeSample,
    candidate_pool: &[String],
    budget: usize,
    alpha: f64,
    rng: &mut SplitMix64,
) -> Result<AttackOutcome, EvalError> {
    let mut outcome = AttackOutcome {
        flipped: false,
        substitutions: RenameMap::default(),
    };
    if budget == 0 || candidate_pool.is_empty() {
        return Ok(outcome);
    }

    let mut current = sample.clone();
    let score = |s: &CodeSample| -> Result<Vec<f64>, EvalError> {
        Ok(counterfactual::predict_scores(model, s, alpha)?)
    };
    let mut current_margin = margin(&score(&current)?, sample.label);

    // Distinct original identifiers in order of first occurrence; each is
    // attacked at most once.
    let toks = lexer::tokenize(&sample.code).map_err(InferError::from)?;
    let ids = lexer::classify_identifiers(&toks);
    let mut targets: Vec<String> = Vec::new();
    for i in ids.iter() {
        let text = toks.tokens[i].text.clone();
        if !targets.contains(&text) {
            targets.push(text);
        }
    }

    let mut committed = 0usize;
    for target in targets {
        if committed >= budget || outcome.flipped {
            break;
        }
        let toks = lexer::tokenize(&current.code).map_err(InferError::from)?;
        let ids = lexer::classify_identifiers(&toks);
        let taken: Vec<&String> = toks
            .tokens
            .iter()
            .filter(|t| t.kind == lexer::TokenKind::Identifier)
            .map(|t| &t.text)
            .collect();

        for _ in 0..ATTACK_CANDIDATES {
            let candidate = &candidate_pool[rng.next_below(candidate_pool.len())];
            // Substitution must stay a semantic-preserving rename: the
            // replacement may not collide with any identifier in the sample.
            if taken.contains(&candidate) {
                continue;
            }
            let mutated_code = splice_rename(&current.code, &toks, &ids, &target, candidate);
            let mutated = CodeSample {
                code: mutated_code,
                ..current.clone()
            };
            let z = score(&mutated)?;
            let new_margin = margin(&z, sample.label);
            if new_margin < current_margin {
                current = mutated;
                current_margin = new_margin;
                committed += 1;
                outcome
                    .substitutions
                    .mapping
                    .insert(target.clone(), candidate.clone());
                if counterfactual::argmax(&z) != sample.label {
                    outcome.flipped = true;
                }
                break;
            }
        }
    }

    Ok(outcome)
}

/// Filters to correctly-classified samples and attacks each one on its own
/// child stream of `attack_seed`, split by sample index.
pub fn attack_suite(
    model: &TrainedModel,
    samples: &[CodeSample],
    candidate_pool: &[String],
    budget: usize,
    alpha: f64,
    attack_seed: u64,
    workers: usize,
) -> Result<AttackResult, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let outcomes: Vec<Option<bool>> = with_workers(workers, || {
        samples
            .par_iter()
            .enumerate()
            .map(|(index, sample)| -> Result<Option<bool>, EvalError> {
                let predicted = counterfactual::predict(model, sample, alpha)?;
                if predicted != sample.label {
                    return Ok(None);
                }
                let mut rng = SplitMix64::new(rng::child_seed(attack_seed, index as u64));
                let outcome =
                    attack_greedy(model, sample, candidate_pool, budget, alpha, &mut rng)?;
                Ok(Some(outcome.flipped))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let n_attacked = outcomes.iter().flatten().count();
    let n_flipped = outcomes.iter().flatten().filter(|&&f| f).count();
    Ok(AttackResult {
        n_attacked,
        n_flipped,
        asr: if n_attacked == 0 {
            None
        } else {
            Some(n_flipped as f64 / n_attacked as f64)
        },
    })
}
