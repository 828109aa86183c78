//! Two-sided Wilcoxon signed-rank test.
//!
//! Zero differences are dropped. Up to [`EXACT_MAX_N`] non-zero pairs the
//! null distribution of W⁺ is enumerated exactly (ties included, via doubled
//! average ranks); above that a normal approximation with tie and continuity
//! corrections is used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    WilcoxonSignedRankExact,
    WilcoxonSignedRankNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    /// `min(W⁺, W⁻)`.
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    /// Number of non-zero differences.
    pub n: usize,
}

/// 1-based average ranks (ties share the mean of their positions).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|a, b| a == b)
        .map(<[f64]>::len)
        .collect()
}

pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<StatTestResult> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} paired observations",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InsufficientData("no paired observations".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("paired scores".into()));
    }

    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(StatTestResult {
            statistic: 0.0,
            p_value: 1.0,
            method: TestMethod::WilcoxonSignedRankExact,
            n: 0,
        });
    }

    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);

    if n <= EXACT_MAX_N {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let p_value = exact_p(&doubled, (2.0 * w_plus).round() as usize);
        return Ok(StatTestResult {
            statistic,
            p_value,
            method: TestMethod::WilcoxonSignedRankExact,
            n,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_groups(&magnitudes)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * Normal::standard().cdf(-z)).clamp(0.0, 1.0)
    };
    Ok(StatTestResult {
        statistic,
        p_value,
        method: TestMethod::WilcoxonSignedRankNormal,
        n,
    })
}

/// `P(|W − c| ≥ |w − c|)` under the sign-flip null, all in doubled-rank units.
fn exact_p(doubled_ranks: &[usize], observed: usize) -> f64 {
    let max: usize = doubled_ranks.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in doubled_ranks {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    // max = n(n+1) is even, so the centre is an integer
    let centre = max / 2;
    let dev = observed.abs_diff(centre);
    let extreme: f64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| s.abs_diff(centre) >= dev)
        .map(|(_, c)| c)
        .sum();
    let all: f64 = counts.iter().sum();
    (extreme / all).min(1.0)
}
