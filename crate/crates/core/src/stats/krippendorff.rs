use crate::error::{Error, Result};

/// Interval-metric Krippendorff's α over a `raters × units` matrix with
/// missing entries. Units with fewer than two values are not pairable and
/// are ignored.
pub fn krippendorff_alpha(matrix: &[Vec<Option<f64>>]) -> Result<f64> {
    let units = matrix.iter().map(Vec::len).max().unwrap_or(0);
    let mut pairable: Vec<Vec<f64>> = Vec::new();
    for u in 0..units {
        let values: Vec<f64> = matrix
            .iter()
            .filter_map(|row| row.get(u).copied().flatten())
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("unit {u}")));
        }
        if values.len() >= 2 {
            pairable.push(values);
        }
    }
    let n: usize = pairable.iter().map(Vec::len).sum();
    if n < 2 {
        return Err(Error::InsufficientData("insufficient pairable values".into()));
    }

    // observed: Σ_u 1/(m_u − 1) Σ_{i≠j} (v_i − v_j)², over n
    let mut observed = 0.0;
    for values in &pairable {
        let mut sum = 0.0;
        for (i, a) in values.iter().enumerate() {
            for b in &values[i + 1..] {
                sum += (a - b) * (a - b);
            }
        }
        observed += 2.0 * sum / (values.len() - 1) as f64;
    }
    if observed == 0.0 {
        return Ok(1.0);
    }
    let d_o = observed / n as f64;

    // expected: Σ_{i≠j} (v_i − v_j)² over all pairable values = 2n Σ (v − v̄)², over n(n − 1)
    let all: Vec<f64> = pairable.into_iter().flatten().collect();
    let mean = all.iter().sum::<f64>() / n as f64;
    let spread: f64 = all.iter().map(|v| (v - mean) * (v - mean)).sum();
    let d_e = 2.0 * n as f64 * spread / (n * (n - 1)) as f64;
    Ok(1.0 - d_o / d_e)
}
