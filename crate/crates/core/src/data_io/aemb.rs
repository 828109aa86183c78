//! AEMB container: a small binary format for `f32` matrices.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                                    |
//! |--------|------|------------------------------------------|
//! | 0      | 4    | magic `b"AEMB"`                          |
//! | 4      | 4    | version `u32` (currently 1)              |
//! | 8      | 1    | kind `u8`: 0 embedding, 1 probability    |
//! | 9      | 8    | rows `u64`                               |
//! | 17     | 8    | cols `u64`                               |
//! | 25     | 4·r·c| `f32` payload, row-major                 |

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{EmbeddingSet, ProbabilityMatrix};

pub const MAGIC: &[u8; 4] = b"AEMB";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Embedding,
    Probability,
}

impl MatrixKind {
    fn code(self) -> u8 {
        match self {
            MatrixKind::Embedding => 0,
            MatrixKind::Probability => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(MatrixKind::Embedding),
            1 => Ok(MatrixKind::Probability),
            other => Err(Error::Aemb(format!("unknown kind {other}"))),
        }
    }
}

/// Raw contents of an AEMB file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub kind: MatrixKind,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl EmbeddingFile {
    pub fn new(kind: MatrixKind, rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        let file = Self {
            kind,
            rows,
            cols,
            data,
        };
        file.validate()?;
        Ok(file)
    }

    pub fn from_embeddings(set: &EmbeddingSet) -> Result<Self> {
        Self::new(
            MatrixKind::Embedding,
            set.rows(),
            set.dim(),
            set.as_slice().iter().map(|&v| v as f32).collect(),
        )
    }

    pub fn from_probabilities(probs: &ProbabilityMatrix) -> Result<Self> {
        let data = probs.iter_rows().flatten().map(|&v| v as f32).collect();
        Self::new(MatrixKind::Probability, probs.rows(), probs.classes(), data)
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Aemb("matrix must be non-empty".into()));
        }
        let expected = self
            .rows
            .checked_mul(self.cols)
            .ok_or_else(|| Error::Aemb("dimensions overflow".into()))?;
        if self.data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}×{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "row {} column {}",
                i / self.cols,
                i % self.cols
            )));
        }
        if self.kind == MatrixKind::Probability {
            self.to_probabilities()?;
        }
        Ok(())
    }

    pub fn to_embeddings(&self, label: impl Into<String>) -> Result<EmbeddingSet> {
        EmbeddingSet::new(
            self.data.iter().map(|&v| f64::from(v)).collect(),
            self.rows,
            self.cols,
            label,
        )
    }

    pub fn to_probabilities(&self) -> Result<ProbabilityMatrix> {
        ProbabilityMatrix::new(
            self.data.iter().map(|&v| f64::from(v)).collect(),
            self.rows,
            self.cols,
        )
    }
}

pub fn encode(file: &EmbeddingFile) -> Result<Vec<u8>> {
    file.validate()?;
    let mut out = Vec::with_capacity(HEADER_LEN + file.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(file.kind.code());
    out.extend_from_slice(&(file.rows as u64).to_le_bytes());
    out.extend_from_slice(&(file.cols as u64).to_le_bytes());
    for v in &file.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingFile> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::NotAemb);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Aemb("truncated header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Aemb(format!("unsupported version {version}")));
    }
    let kind = MatrixKind::from_code(bytes[8])?;
    let rows = u64::from_le_bytes(bytes[9..17].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[17..25].try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::Aemb("dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < count {
        return Err(Error::Aemb(format!(
            "truncated payload: {} of {count} bytes",
            payload.len()
        )));
    }
    if payload.len() > count {
        return Err(Error::Aemb(format!(
            "{} trailing bytes after payload",
            payload.len() - count
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingFile::new(kind, rows as usize, cols as usize, data)
}

pub fn write_embedding_file(path: impl AsRef<Path>, file: &EmbeddingFile) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(file)?;
    std::fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    decode(&bytes)
}
