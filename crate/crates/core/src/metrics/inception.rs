use serde::{Deserialize, Serialize};

use super::ProbabilityMatrix;
use crate::error::{Error, Result};

/// `Σ p ln(p / q)` with `0 · ln(0 / q) = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

fn score_rows<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, classes: usize) -> f64 {
    let n = rows.clone().count() as f64;
    let mut marginal = vec![0.0; classes];
    for row in rows.clone() {
        for (m, p) in marginal.iter_mut().zip(row) {
            *m += p;
        }
    }
    marginal.iter_mut().for_each(|m| *m /= n);
    let mean_kl = rows.map(|row| kl_divergence(row, &marginal)).sum::<f64>() / n;
    // mean KL is a mutual information, so it lies in [0, ln C]; clamp rounding noise
    mean_kl.clamp(0.0, (classes as f64).ln()).exp()
}

/// Whole-set inception score `exp(mean_i KL(p(y|x_i) ‖ p(y)))`.
///
/// The score is bounded below by 1 and above by the class count.
pub fn inception_score(probs: &ProbabilityMatrix) -> f64 {
    score_rows(probs.iter_rows(), probs.classes())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub mean: f64,
    pub std: f64,
}

/// Inception score averaged over `splits` contiguous row blocks, each with its own marginal.
pub fn inception_score_splits(probs: &ProbabilityMatrix, splits: usize) -> Result<SplitScore> {
    if splits == 0 || splits > probs.rows() {
        return Err(Error::InvalidParameter(format!(
            "{splits} splits for {} rows",
            probs.rows()
        )));
    }
    let n = probs.rows();
    let scores: Vec<f64> = (0..splits)
        .map(|s| {
            let (start, end) = (s * n / splits, (s + 1) * n / splits);
            score_rows((start..end).map(|i| probs.row(i)), probs.classes())
        })
        .collect();
    let mean = scores.iter().sum::<f64>() / splits as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / splits as f64;
    Ok(SplitScore {
        mean,
        std: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> ProbabilityMatrix {
        ProbabilityMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn uniform_rows_score_one() {
        assert_eq!(inception_score(&matrix(&[&[0.5, 0.5], &[0.5, 0.5]])), 1.0);
    }

    #[test]
    fn one_hot_scores_class_count() {
        assert!((inception_score(&matrix(&[&[1.0, 0.0], &[0.0, 1.0]])) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated() {
        let expected = (0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln()).exp();
        let got = inception_score(&matrix(&[&[0.8, 0.2], &[0.2, 0.8]]));
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 1.2126).abs() < 1e-4);
    }

    #[test]
    fn unnormalized_row_rejected() {
        let err = ProbabilityMatrix::from_rows(&[vec![0.5, 0.4]]).unwrap_err();
        assert!(matches!(err, Error::RowNotNormalized(0)));
    }

    #[test]
    fn splits() {
        let m = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let s = inception_score_splits(&m, 2).unwrap();
        assert!((s.mean - 2.0).abs() < 1e-12);
        assert!(s.std < 1e-12);
        assert!(inception_score_splits(&m, 5).is_err());
    }
}
