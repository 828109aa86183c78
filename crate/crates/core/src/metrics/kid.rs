//! Kernel inception distance: unbiased squared MMD under the cubic
//! polynomial kernel `k(x, y) = (xᵀy / D + 1)³`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EmbeddingSet;
use crate::error::{Error, Result};

pub fn polynomial_kernel(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (dot / x.len() as f64 + 1.0).powi(3)
}

fn check(reference: &EmbeddingSet, generated: &EmbeddingSet) -> Result<()> {
    if reference.rows() < 2 || generated.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "KID needs at least 2 vectors per set, got {} and {}",
            reference.rows(),
            generated.rows()
        )));
    }
    if reference.dim() != generated.dim() {
        return Err(Error::ShapeMismatch(format!(
            "dimension {} vs {}",
            reference.dim(),
            generated.dim()
        )));
    }
    Ok(())
}

/// Sum of `k(x_i, x_j)` over ordered pairs `i ≠ j`.
fn within_sum(set: &EmbeddingSet) -> f64 {
    let n = set.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += polynomial_kernel(set.row(i), set.row(j));
        }
    }
    2.0 * sum
}

fn cross_sum(a: &EmbeddingSet, b: &EmbeddingSet) -> f64 {
    a.iter_rows()
        .map(|x| b.iter_rows().map(|y| polynomial_kernel(x, y)).sum::<f64>())
        .sum()
}

fn mmd2_unbiased(a: &EmbeddingSet, b: &EmbeddingSet) -> f64 {
    let (m, n) = (a.rows() as f64, b.rows() as f64);
    within_sum(a) / (m * (m - 1.0)) + within_sum(b) / (n * (n - 1.0)) - 2.0 * cross_sum(a, b) / (m * n)
}

/// Whole-set unbiased estimate; may be slightly negative.
pub fn kid(reference: &EmbeddingSet, generated: &EmbeddingSet) -> Result<f64> {
    check(reference, generated)?;
    Ok(mmd2_unbiased(reference, generated))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KidBlocks {
    pub block_size: usize,
    pub repetitions: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KidEstimate {
    pub mean: f64,
    pub std: f64,
}

/// KID averaged over random subsets of `block_size` vectors drawn without replacement.
pub fn kid_blocked(reference: &EmbeddingSet, generated: &EmbeddingSet, blocks: &KidBlocks) -> Result<KidEstimate> {
    check(reference, generated)?;
    let size = blocks.block_size;
    if size < 2 || size > reference.rows() || size > generated.rows() || blocks.repetitions == 0 {
        return Err(Error::InvalidParameter(format!(
            "block size {size} × {} repetitions does not fit sets of {} and {}",
            blocks.repetitions,
            reference.rows(),
            generated.rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(blocks.seed);
    let mut values = Vec::with_capacity(blocks.repetitions);
    for _ in 0..blocks.repetitions {
        let a = reference.select(&sample(&mut rng, reference.rows(), size).into_vec())?;
        let b = generated.select(&sample(&mut rng, generated.rows(), size).into_vec())?;
        values.push(mmd2_unbiased(&a, &b));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    Ok(KidEstimate {
        mean,
        std: var.sqrt(),
    })
}
