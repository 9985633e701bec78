//! Binary checkpoint format for trained models.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic "CREAMCK1"
//! u64   vocab_size, embed_dim, n_classes
//! f64   alpha, fusion_fraction, lr
//! u64   epochs, seed, max_len
//! u8    combined_only
//! vocab entries in id order: u32 byte length + utf-8 bytes
//! f64   embedding row-major [vocab_size × embed_dim]
//! f64   weights row-major   [embed_dim × n_classes]
//! f64   bias                [n_classes]
//! ```
//!
//! Every value is written bit-exactly, so save → load → save reproduces the
//! file byte-for-byte.

use std::path::Path;

use thiserror::Error;

use crate::model::{ModelParams, Vocab};
use crate::train::{TrainConfig, TrainedModel};

const MAGIC: &[u8; 8] = b"CREAMCK1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    Format(String),
}

pub fn to_bytes(model: &TrainedModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let params = &model.params;
    for v in [
        params.vocab_size() as u64,
        params.dim() as u64,
        params.classes() as u64,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let config = &model.config;
    for v in [config.alpha, config.fusion_fraction, config.lr] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [config.epochs as u64, config.seed, config.max_len as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(config.combined_only as u8);
    for token in model.vocab.id_order() {
        out.extend_from_slice(&(token.len() as u32).to_le_bytes());
        out.extend_from_slice(token.as_bytes());
    }
    let mut write_row = |row: &[f64]| {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for row in &params.embedding {
        write_row(row);
    }
    for row in &params.weights {
        write_row(row);
    }
    write_row(&params.bias);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Format(format!(
                "truncated at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_row(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<TrainedModel, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(CheckpointError::Format("bad magic".to_string()));
    }
    let vocab_size = r.u64()? as usize;
    let dim = r.u64()? as usize;
    let classes = r.u64()? as usize;
    let alpha = r.f64()?;
    let fusion_fraction = r.f64()?;
    let lr = r.f64()?;
    let epochs = r.u64()? as usize;
    let seed = r.u64()?;
    let max_len = r.u64()? as usize;
    let combined_only = r.take(1)?[0] != 0;

    let mut tokens = Vec::with_capacity(vocab_size);
    for _ in 0..vocab_size {
        let len = r.u32()? as usize;
        let text = std::str::from_utf8(r.take(len)?)
            .map_err(|e| CheckpointError::Format(format!("vocab entry not utf-8: {e}")))?;
        tokens.push(text.to_string());
    }

    let embedding = (0..vocab_size)
        .map(|_| r.f64_row(dim))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = (0..dim)
        .map(|_| r.f64_row(classes))
        .collect::<Result<Vec<_>, _>>()?;
    let bias = r.f64_row(classes)?;
    if r.pos != bytes.len() {
        return Err(CheckpointError::Format(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }

    Ok(TrainedModel {
        params: ModelParams {
            embedding,
            weights,
            bias,
        },
        vocab: Vocab::from_id_order(tokens),
        config: TrainConfig {
            alpha,
            fusion_fraction,
            epochs,
            lr,
            seed,
            embed_dim: dim,
            max_len,
            combined_only,
        },
    })
}

pub fn save(model: &TrainedModel, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, to_bytes(model)).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: &Path) -> Result<TrainedModel, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}
