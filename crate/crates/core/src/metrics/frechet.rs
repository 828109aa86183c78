//! Gaussian fits and the Fréchet distance between them (FAD).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::EmbeddingSet;
use crate::error::{Error, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-9;
const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    count: usize,
}

impl GaussianStats {
    /// Validates symmetry and numerical positive semi-definiteness; the stored
    /// covariance is the symmetrized input.
    pub fn new(mean: Vec<f64>, covariance: Vec<Vec<f64>>, count: usize) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidParameter("empty mean vector".into()));
        }
        if covariance.len() != d || covariance.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch(format!("covariance must be {d}×{d}")));
        }
        let cov = DMatrix::from_fn(d, d, |i, j| covariance[i][j]);
        Self::from_parts(DVector::from_vec(mean), cov, count)
    }

    fn from_parts(mean: DVector<f64>, covariance: DMatrix<f64>, count: usize) -> Result<Self> {
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Gaussian statistics".into()));
        }
        let scale = covariance.amax().max(1.0);
        let asymmetry = (&covariance - covariance.transpose()).amax();
        if asymmetry > SYMMETRY_TOLERANCE * scale {
            return Err(Error::InvalidParameter(format!(
                "covariance not symmetric (max deviation {asymmetry:e})"
            )));
        }
        let covariance = symmetrize(covariance);
        let min_eig = SymmetricEigen::new(covariance.clone()).eigenvalues.min();
        if min_eig < -PSD_TOLERANCE * scale {
            return Err(Error::InvalidParameter(format!(
                "covariance not positive semi-definite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self {
            mean,
            covariance,
            count,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Column means and unbiased (N − 1) covariance.
pub fn fit_gaussian(embeddings: &EmbeddingSet) -> Result<GaussianStats> {
    let n = embeddings.rows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "Gaussian fit needs at least 2 vectors, got {n}"
        )));
    }
    let d = embeddings.dim();
    let data = DMatrix::from_row_slice(n, d, embeddings.as_slice());
    let mean = data.row_mean().transpose();
    let centred = DMatrix::from_fn(n, d, |i, j| data[(i, j)] - mean[j]);
    let covariance = (centred.transpose() * &centred) / (n as f64 - 1.0);
    GaussianStats::from_parts(mean, symmetrize(covariance), n)
}

/// Square root of a symmetric PSD matrix; negative eigenvalues are clamped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m.clone()));
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `‖μa − μb‖² + tr(Σa + Σb − 2 (Σa^½ Σb Σa^½)^½)`, clamped at zero.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "dimension {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let root_a = psd_sqrt(&a.covariance);
    let inner = symmetrize(&root_a * &b.covariance * &root_a);
    let cross_trace: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    let distance = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross_trace;
    if !distance.is_finite() {
        return Err(Error::NonFinite("Fréchet distance".into()));
    }
    Ok(distance.max(0.0))
}

/// Fréchet audio distance between two embedding sets.
pub fn fad(reference: &EmbeddingSet, generated: &EmbeddingSet) -> Result<f64> {
    frechet_distance(&fit_gaussian(reference)?, &fit_gaussian(generated)?)
}
