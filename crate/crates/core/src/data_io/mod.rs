//! File formats shared by the metrics engine, the study service and the
//! external embedding extractor.

pub mod aemb;
mod csv_matrix;
mod manifest;

pub use aemb::{read_embedding_file, write_embedding_file, EmbeddingFile, MatrixKind};
pub use csv_matrix::{load_matrix, parse_csv_matrix};
pub use manifest::{load_manifest, parse_manifest, ManifestItem, StudyManifest, StudySettings};

use std::path::Path;

use crate::error::Result;
use crate::metrics::{EmbeddingSet, ProbabilityMatrix};

pub fn load_embeddings(path: impl AsRef<Path>, label: impl Into<String>) -> Result<EmbeddingSet> {
    load_matrix(path, MatrixKind::Embedding)?.to_embeddings(label)
}

pub fn load_probabilities(path: impl AsRef<Path>) -> Result<ProbabilityMatrix> {
    load_matrix(path, MatrixKind::Probability)?.to_probabilities()
}
