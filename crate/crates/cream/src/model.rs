//! The shared basic classifier: token embedding, mean pooling, linear layer,
//! softmax cross-entropy, with exact analytic gradients.
//!
//! All three branches run this model with one shared [`ModelParams`]; there
//! are no branch-private weights anywhere in the crate.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::lexer::is_reserved_placeholder;
use crate::rng::SplitMix64;

/// Reserved vocabulary ids, fixed in this order.
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const ID_PLACEHOLDER_ID: usize = 2;
/// All `VAR_<n>` abstraction placeholders share this single id.
pub const VAR_ID: usize = 3;

const RESERVED: [&str; 4] = ["<PAD>", "<UNK>", "<ID>", "VAR_*"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Vocab {
    /// Builds a vocabulary: the four reserved entries followed by the
    /// distinct tokens of `corpus` in first-occurrence order.
    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a str>) -> Vocab {
        let mut vocab = Vocab {
            token_to_id: HashMap::new(),
            id_to_token: Vec::new(),
        };
        for reserved in RESERVED {
            vocab.push(reserved);
        }
        for token in corpus {
            if !vocab.token_to_id.contains_key(token) && !is_special(token) {
                vocab.push(token);
            }
        }
        vocab
    }

    /// Rebuilds a vocabulary from an id-ordered token list (checkpoint load).
    pub fn from_id_order(tokens: Vec<String>) -> Vocab {
        let token_to_id = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab {
            token_to_id,
            id_to_token: tokens,
        }
    }

    fn push(&mut self, token: &str) {
        self.token_to_id.insert(token.to_string(), self.id_to_token.len());
        self.id_to_token.push(token.to_string());
    }

    /// Token text to id. Abstraction placeholders collapse onto [`VAR_ID`];
    /// out-of-vocabulary tokens map to [`UNK_ID`].
    pub fn lookup(&self, token: &str) -> usize {
        if token == "<ID>" {
            return ID_PLACEHOLDER_ID;
        }
        if is_reserved_placeholder(token) {
            return VAR_ID;
        }
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t)).collect()
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Tokens in id order.
    pub fn id_order(&self) -> &[String] {
        &self.id_to_token
    }
}

fn is_special(token: &str) -> bool {
    token == "<ID>" || is_reserved_placeholder(token) || RESERVED.contains(&token)
}

/// Embedding matrix `[vocab × dim]`, classifier weights `[dim × classes]`
/// and bias `[classes]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embedding: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl ModelParams {
    /// Uniform init in `[-0.1, 0.1]` for embeddings and weights, zero bias.
    pub fn init(vocab_size: usize, dim: usize, classes: usize, rng: &mut SplitMix64) -> ModelParams {
        let mut matrix = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.uniform(-0.1, 0.1)).collect())
                .collect()
        };
        ModelParams {
            embedding: matrix(vocab_size, dim),
            weights: matrix(dim, classes),
            bias: vec![0.0; classes],
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }
}

/// Gradients of one or more losses with respect to [`ModelParams`].
/// Embedding gradients are kept sparse: only touched rows are present.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding_rows: BTreeMap<usize, Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros(params: &ModelParams) -> Gradients {
        Gradients {
            embedding_rows: BTreeMap::new(),
            weights: vec![vec![0.0; params.classes()]; params.dim()],
            bias: vec![0.0; params.classes()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    Shape { id: usize, vocab_size: usize },
    #[error("label {label} out of range for {classes} classes")]
    Index { label: usize, classes: usize },
    #[error("logit vectors have mismatched lengths: {left} vs {right}")]
    LogitShape { left: usize, right: usize },
}

/// Mean of the embedding rows for `ids`; the zero vector for an empty
/// sequence.
pub fn mean_pool(params: &ModelParams, ids: &[usize]) -> Result<Vec<f64>, ModelError> {
    let mut pooled = vec![0.0; params.dim()];
    if ids.is_empty() {
        return Ok(pooled);
    }
    for &id in ids {
        let row = params.embedding.get(id).ok_or(ModelError::Shape {
            id,
            vocab_size: params.vocab_size(),
        })?;
        for (p, e) in pooled.iter_mut().zip(row) {
            *p += e;
        }
    }
    let inv = 1.0 / ids.len() as f64;
    for p in &mut pooled {
        *p *= inv;
    }
    Ok(pooled)
}

/// Classification scores `z = Wᵀ·meanpool(E[ids]) + b`. An empty sequence
/// pools to zero, so `z = b`.
pub fn forward(params: &ModelParams, ids: &[usize]) -> Result<Vec<f64>, ModelError> {
    let pooled = mean_pool(params, ids)?;
    let mut z = params.bias.clone();
    for (d, w_row) in params.weights.iter().enumerate() {
        let p = pooled[d];
        for (c, w) in w_row.iter().enumerate() {
            z[c] += p * w;
        }
    }
    Ok(z)
}

/// Numerically stabilized softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(z)[label]`, computed with max subtraction.
pub fn cross_entropy(z: &[f64], label: usize) -> Result<f64, ModelError> {
    if label >= z.len() {
        return Err(ModelError::Index {
            label,
            classes: z.len(),
        });
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum_exp = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    Ok(log_sum_exp - z[label])
}

/// Loss and its gradient with respect to the logits:
/// `softmax(z) - onehot(label)`.
pub fn loss_and_logit_grad(z: &[f64], label: usize) -> Result<(f64, Vec<f64>), ModelError> {
    let loss = cross_entropy(z, label)?;
    let mut dz = softmax(z);
    dz[label] -= 1.0;
    Ok((loss, dz))
}

/// Accumulates into `grads` the gradient of a loss whose logit gradient on
/// `forward(params, ids)` is `dz`, scaled by `scale`.
pub fn accumulate_gradients(
    params: &ModelParams,
    ids: &[usize],
    dz: &[f64],
    scale: f64,
    grads: &mut Gradients,
) -> Result<(), ModelError> {
    let pooled = mean_pool(params, ids)?;
    for (g_row, &p) in grads.weights.iter_mut().zip(&pooled) {
        for (g, &dzc) in g_row.iter_mut().zip(dz) {
            *g += scale * p * dzc;
        }
    }
    for (c, g) in grads.bias.iter_mut().enumerate() {
        *g += scale * dz[c];
    }
    if ids.is_empty() {
        return Ok(());
    }
    // d(pool)/d(E[id]) = 1/len for every occurrence of id.
    let occ_scale = scale / ids.len() as f64;
    // dL/d(pool[d]) = Σ_c W[d][c]·dz[c]
    let mut d_pool = vec![0.0; params.dim()];
    for (d, w_row) in params.weights.iter().enumerate() {
        d_pool[d] = w_row.iter().zip(dz).map(|(w, g)| w * g).sum();
    }
    for &id in ids {
        let row = grads
            .embedding_rows
            .entry(id)
            .or_insert_with(|| vec![0.0; params.dim()]);
        for (g, dp) in row.iter_mut().zip(&d_pool) {
            *g += occ_scale * dp;
        }
    }
    Ok(())
}

/// Loss and exact gradients of `cross_entropy(forward(params, ids), label)`.
pub fn backward(
    params: &ModelParams,
    ids: &[usize],
    label: usize,
) -> Result<(f64, Gradients), ModelError> {
    let z = forward(params, ids)?;
    let (loss, dz) = loss_and_logit_grad(&z, label)?;
    let mut grads = Gradients::zeros(params);
    accumulate_gradients(params, ids, &dz, 1.0, &mut grads)?;
    Ok((loss, grads))
}

/// In-place step `params -= lr * grads`.
pub fn sgd_step(params: &mut ModelParams, grads: &Gradients, lr: f64) {
    for (&id, g_row) in &grads.embedding_rows {
        for (e, g) in params.embedding[id].iter_mut().zip(g_row) {
            *e -= lr * g;
        }
    }
    for (w_row, g_row) in params.weights.iter_mut().zip(&grads.weights) {
        for (w, g) in w_row.iter_mut().zip(g_row) {
            *w -= lr * g;
        }
    }
    for (b, g) in params.bias.iter_mut().zip(&grads.bias) {
        *b -= lr * g;
    }
}
