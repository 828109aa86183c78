//! Number of statistically different bins (NDB/k).
//!
//! Training samples are clustered with k-means; each centroid's Voronoi cell
//! is a bin. Test samples are binned by nearest centroid and every bin's
//! train/test occupancy is compared with a two-proportion z-test.

use std::collections::HashSet;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EmbeddingSet;
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 50;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const MAX_ITERATIONS: usize = 300;
pub const CONVERGENCE_SHIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdbModel {
    /// `k` rows of `dim` values.
    pub centroids: Vec<Vec<f64>>,
    pub train_bin_proportions: Vec<f64>,
    pub train_count: usize,
    pub k: usize,
    pub alpha: f64,
}

impl NdbModel {
    pub fn new(
        centroids: Vec<Vec<f64>>,
        train_bin_proportions: Vec<f64>,
        train_count: usize,
        alpha: f64,
    ) -> Result<Self> {
        let model = Self {
            k: centroids.len(),
            centroids,
            train_bin_proportions,
            train_count,
            alpha,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.centroids.len() != self.k {
            return Err(Error::InvalidParameter("NDB model needs k ≥ 1 centroids".into()));
        }
        let dim = self.dim();
        if dim == 0 || self.centroids.iter().any(|c| c.len() != dim) {
            return Err(Error::ShapeMismatch("centroids differ in dimensionality".into()));
        }
        if self.centroids.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("centroid".into()));
        }
        if self.train_bin_proportions.len() != self.k {
            return Err(Error::ShapeMismatch("one proportion per bin required".into()));
        }
        let sum: f64 = self.train_bin_proportions.iter().sum();
        if self.train_bin_proportions.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("bin proportions must be non-negative and sum to 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.train_count == 0 {
            return Err(Error::InvalidParameter("train_count must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    pub fn nearest(&self, point: &[f64]) -> usize {
        nearest(&self.centroids, point).0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinResult {
    pub bin: usize,
    pub train_proportion: f64,
    pub test_proportion: f64,
    pub z: f64,
    pub p_value: f64,
    pub different: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdbScore {
    pub ndb: usize,
    pub ratio: f64,
    pub per_bin: Vec<BinResult>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of and squared distance to the closest centroid; ties go to the lower index.
fn nearest(centroids: &[Vec<f64>], point: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, point);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn distinct_rows(data: &EmbeddingSet, limit: usize) -> usize {
    let mut seen = HashSet::new();
    for row in data.iter_rows() {
        seen.insert(row.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        if seen.len() >= limit {
            break;
        }
    }
    seen.len()
}

fn kmeans_plus_plus(data: &EmbeddingSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.rows();
    let mut centroids = vec![data.row(rng.random_range(0..n)).to_vec()];
    let mut dist: Vec<f64> = data
        .iter_rows()
        .map(|r| squared_distance(r, &centroids[0]))
        .collect();
    while centroids.len() < k {
        // distinct-row check upstream guarantees some positive weight
        let chosen = match WeightedIndex::new(&dist) {
            Ok(w) => w.sample(rng),
            Err(_) => dist
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map_or(0, |(i, _)| i),
        };
        let c = data.row(chosen).to_vec();
        for (d, row) in dist.iter_mut().zip(data.iter_rows()) {
            *d = d.min(squared_distance(row, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's k-means with k-means++ seeding; returns centroids and final assignments.
pub fn kmeans(data: &EmbeddingSet, k: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let n = data.rows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::InsufficientData(format!("{n} samples for {k} bins")));
    }
    if k > 1 && distinct_rows(data, k) < k {
        return Err(Error::InsufficientDiversity(format!(
            "fewer than {k} distinct samples"
        )));
    }

    let dim = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(data, k, &mut rng);
    let mut assignment = vec![0usize; n];

    for _ in 0..MAX_ITERATIONS {
        let mut dists = vec![0.0; n];
        for (i, row) in data.iter_rows().enumerate() {
            let (c, d) = nearest(&centroids, row);
            assignment[i] = c;
            dists[i] = d;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (row, &c) in data.iter_rows().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }

        let mut updated = Vec::with_capacity(k);
        let mut taken = HashSet::new();
        for c in 0..k {
            if counts[c] > 0 {
                updated.push(sums[c].iter().map(|s| s / counts[c] as f64).collect::<Vec<_>>());
            } else {
                // empty cluster: move it to the worst-served point
                let far = (0..n)
                    .filter(|i| !taken.contains(i))
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                taken.insert(far);
                dists[far] = 0.0;
                updated.push(data.row(far).to_vec());
            }
        }

        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < CONVERGENCE_SHIFT {
            break;
        }
    }

    for (i, row) in data.iter_rows().enumerate() {
        assignment[i] = nearest(&centroids, row).0;
    }
    Ok((centroids, assignment))
}

pub fn fit_ndb(train: &EmbeddingSet, k: usize, alpha: f64, seed: u64) -> Result<NdbModel> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    let (centroids, assignment) = kmeans(train, k, seed)?;
    let n = train.rows();
    let mut counts = vec![0usize; k];
    for c in assignment {
        counts[c] += 1;
    }
    let proportions = counts.iter().map(|&c| c as f64 / n as f64).collect();
    NdbModel::new(centroids, proportions, n, alpha)
}

/// Pooled two-proportion z-test; returns `(z, two-sided p)`.
pub fn two_proportion_z_test(p1: f64, n1: usize, p2: f64, n2: usize) -> (f64, f64) {
    let (n1, n2) = (n1 as f64, n2 as f64);
    let pooled = (p1 * n1 + p2 * n2) / (n1 + n2);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    if !(se > 0.0) {
        // both samples entirely inside (or outside) the bin
        return (0.0, 1.0);
    }
    let z = (p1 - p2) / se;
    let normal = Normal::standard();
    let p = (2.0 * normal.cdf(-z.abs())).clamp(0.0, 1.0);
    (z, p)
}

pub fn ndb_score(model: &NdbModel, test: &EmbeddingSet) -> Result<NdbScore> {
    model.validate()?;
    if test.dim() != model.dim() {
        return Err(Error::ShapeMismatch(format!(
            "test samples have dimension {}, centroids {}",
            test.dim(),
            model.dim()
        )));
    }
    let m = test.rows();
    let mut counts = vec![0usize; model.k];
    for row in test.iter_rows() {
        counts[model.nearest(row)] += 1;
    }

    let per_bin: Vec<BinResult> = counts
        .iter()
        .enumerate()
        .map(|(bin, &count)| {
            let train_p = model.train_bin_proportions[bin];
            let test_p = count as f64 / m as f64;
            let (z, p_value) = two_proportion_z_test(train_p, model.train_count, test_p, m);
            BinResult {
                bin,
                train_proportion: train_p,
                test_proportion: test_p,
                z,
                p_value,
                different: p_value < model.alpha,
            }
        })
        .collect();
    let ndb = per_bin.iter().filter(|b| b.different).count();
    Ok(NdbScore {
        ndb,
        ratio: ndb as f64 / model.k as f64,
        per_bin,
    })
}
