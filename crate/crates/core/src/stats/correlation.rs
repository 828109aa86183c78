use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::wilcoxon::average_ranks;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub n: usize,
    pub pearson_r: Option<f64>,
    pub pearson_p: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub spearman_p: Option<f64>,
    /// Coefficient of determination of the OLS fit `rating ~ metric`.
    pub r_squared: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson's r; `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a correlation coefficient via Student's t with n − 2 dof.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let dof = (n - 2) as f64;
    let t = r * (dof / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).expect("n ≥ 3");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

pub fn correlate(ratings: &[f64], metric: &[f64]) -> Result<Correlation> {
    if ratings.len() != metric.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} ratings vs {} metric values",
            ratings.len(),
            metric.len()
        )));
    }
    let n = ratings.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("correlation needs ≥ 3 samples, got {n}")));
    }
    if ratings.iter().chain(metric).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }

    let pearson_r = pearson(metric, ratings);
    let spearman_rho = pearson(&average_ranks(metric), &average_ranks(ratings));

    let (mx, my) = (mean(metric), mean(ratings));
    let sxx: f64 = metric.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = metric.iter().zip(ratings).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ratings.iter().map(|y| (y - my) * (y - my)).sum();
    let (slope, intercept, r_squared) = if sxx > 0.0 && syy > 0.0 {
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_res: f64 = metric
            .iter()
            .zip(ratings)
            .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
            .sum();
        (Some(slope), Some(intercept), Some((1.0 - ss_res / syy).clamp(0.0, 1.0)))
    } else {
        (None, None, None)
    };

    let note = pearson_r.is_none().then(|| {
        if syy == 0.0 {
            "constant ratings: correlation undefined".to_owned()
        } else {
            "constant metric values: correlation undefined".to_owned()
        }
    });

    Ok(Correlation {
        n,
        pearson_p: pearson_r.map(|r| correlation_p_value(r, n)),
        pearson_r,
        spearman_p: spearman_rho.map(|r| correlation_p_value(r, n)),
        spearman_rho,
        r_squared,
        slope,
        intercept,
        note,
    })
}
