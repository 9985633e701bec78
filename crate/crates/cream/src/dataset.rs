//! Labeled code samples and the JSONL dataset format.
//!
//! One JSON object per line: `{"id": string, "code": string, "label": integer}`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSample {
    pub id: String,
    pub code: String,
    pub label: usize,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed sample: {source}")]
    Malformed {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: duplicate sample id {id:?}")]
    DuplicateId { path: String, line: usize, id: String },
}

/// Writes samples as JSONL, one object per line, preserving order.
pub fn write_jsonl(path: &Path, samples: &[CodeSample]) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = File::create(path).map_err(io_err)?;
    for sample in samples {
        let line = serde_json::to_string(sample).expect("sample serialization is infallible");
        file.write_all(line.as_bytes()).map_err(io_err)?;
        file.write_all(b"\n").map_err(io_err)?;
    }
    Ok(())
}

/// Reads a JSONL dataset, enforcing unique ids within the file.
pub fn read_jsonl(path: &Path) -> Result<Vec<CodeSample>, DatasetError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: display.clone(),
        source,
    })?;
    let mut samples: Vec<CodeSample> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: display.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: CodeSample =
            serde_json::from_str(&line).map_err(|source| DatasetError::Malformed {
                path: display.clone(),
                line: idx + 1,
                source,
            })?;
        if !seen.insert(sample.id.clone()) {
            return Err(DatasetError::DuplicateId {
                path: display.clone(),
                line: idx + 1,
                id: sample.id,
            });
        }
        samples.push(sample);
    }
    Ok(samples)
}
