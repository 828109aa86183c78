use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::{correlate, Correlation};
use super::krippendorff::krippendorff_alpha;
use super::ranking::{ranking_permutations, PermutationCounts};
use super::ratings::{RatingsTable, ANCHOR, REFERENCE};
use super::screening::{mushra_band, screen_raters, Band, Screening};
use super::wilcoxon::{wilcoxon_signed_rank, StatTestResult};
use crate::error::{Error, Result};
use crate::metrics::MetricReport;

pub const DEFAULT_THRESHOLD: f64 = 85.0;

/// What a paired observation is in the condition-vs-condition tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// One pair per (rater, item) response.
    #[default]
    PerResponse,
    /// One pair per rater, using that rater's condition means.
    PerRaterMean,
}

/// Units of the agreement matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementUnit {
    /// Conditions, each rater contributing their mean score.
    #[default]
    Condition,
    /// (item, condition) stimuli with raw scores.
    Stimulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub threshold: f64,
    pub pairing: Pairing,
    pub bonferroni: bool,
    pub agreement_unit: AgreementUnit,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            pairing: Pairing::default(),
            bonferroni: false,
            agreement_unit: AgreementUnit::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub band: Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub result: StatTestResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_adjusted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupSummary {
    pub field: String,
    pub value: String,
    pub raters: usize,
    pub condition_means: BTreeMap<String, f64>,
    pub tests: Vec<PairwiseTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    /// "per_item" when the report carries per-item values, else "per_system".
    pub level: String,
    #[serde(flatten)]
    pub correlation: Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub options: AnalysisOptions,
    pub screening: Screening,
    pub conditions: BTreeMap<String, ConditionSummary>,
    /// rater → condition → mean score.
    pub rater_means: BTreeMap<String, BTreeMap<String, f64>>,
    pub pairwise: Vec<PairwiseTest>,
    pub krippendorff_alpha: Option<f64>,
    pub permutation_counts: Option<PermutationCounts>,
    pub correlations: BTreeMap<String, MetricCorrelation>,
    pub subgroups: Vec<SubgroupSummary>,
    /// Reasons for any section left empty.
    pub notes: Vec<String>,
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn describe(scores: &[f64]) -> Result<ConditionSummary> {
    if scores.is_empty() {
        return Err(Error::InsufficientData("no scores".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(ConditionSummary {
        n: sorted.len(),
        mean,
        median: quantile(&sorted, 0.5),
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
        band: mushra_band(mean)?,
    })
}

/// Conditions other than the hidden reference and the anchor.
pub fn system_conditions(table: &RatingsTable) -> Vec<String> {
    table
        .conditions()
        .into_iter()
        .filter(|c| *c != REFERENCE && *c != ANCHOR)
        .map(str::to_owned)
        .collect()
}

fn paired(table: &RatingsTable, a: &str, b: &str, pairing: Pairing) -> (Vec<f64>, Vec<f64>) {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    match pairing {
        Pairing::PerResponse => {
            for scores in table.responses().values() {
                if let (Some(&sa), Some(&sb)) = (scores.get(a), scores.get(b)) {
                    x.push(f64::from(sa));
                    y.push(f64::from(sb));
                }
            }
        }
        Pairing::PerRaterMean => {
            for means in table.rater_means().values() {
                if let (Some(&ma), Some(&mb)) = (means.get(a), means.get(b)) {
                    x.push(ma);
                    y.push(mb);
                }
            }
        }
    }
    (x, y)
}

fn pairwise_tests(table: &RatingsTable, options: &AnalysisOptions) -> Vec<PairwiseTest> {
    let conditions: Vec<&str> = table.conditions().into_iter().collect();
    let pairs: Vec<(&str, &str)> = conditions
        .iter()
        .enumerate()
        .flat_map(|(i, a)| conditions[i + 1..].iter().map(move |b| (*a, *b)))
        .collect();
    let mut tests: Vec<PairwiseTest> = pairs
        .par_iter()
        .filter_map(|(a, b)| {
            let (x, y) = paired(table, a, b, options.pairing);
            let result = wilcoxon_signed_rank(&x, &y).ok()?;
            Some(PairwiseTest {
                a: (*a).to_owned(),
                b: (*b).to_owned(),
                result,
                p_adjusted: None,
            })
        })
        .collect();
    if options.bonferroni {
        let m = tests.len() as f64;
        for t in &mut tests {
            t.p_adjusted = Some((t.result.p_value * m).min(1.0));
        }
    }
    tests
}

fn agreement(table: &RatingsTable, unit: AgreementUnit) -> Result<f64> {
    let raters: Vec<&String> = table.raters().keys().collect();
    let matrix: Vec<Vec<Option<f64>>> = match unit {
        AgreementUnit::Condition => {
            let conditions: Vec<&str> = table.conditions().into_iter().collect();
            let means = table.rater_means();
            raters
                .iter()
                .map(|r| {
                    conditions
                        .iter()
                        .map(|c| means.get(*r).and_then(|m| m.get(*c)).copied())
                        .collect()
                })
                .collect()
        }
        AgreementUnit::Stimulus => {
            let units: BTreeSet<(&str, &str)> = table
                .rows()
                .iter()
                .map(|r| (r.item.as_str(), r.condition.as_str()))
                .collect();
            let index: BTreeMap<(&str, &str), usize> =
                units.iter().enumerate().map(|(i, u)| (*u, i)).collect();
            let row_of: BTreeMap<&str, usize> =
                raters.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
            let mut m = vec![vec![None; units.len()]; raters.len()];
            for r in table.rows() {
                m[row_of[r.rater.as_str()]][index[&(r.item.as_str(), r.condition.as_str())]] =
                    Some(f64::from(r.score));
            }
            m
        }
    };
    krippendorff_alpha(&matrix)
}

/// Descriptives, tests, agreement and rankings over an already screened table.
pub fn summarize(table: &RatingsTable, options: &AnalysisOptions) -> Result<AnalysisReport> {
    if table.is_empty() {
        return Err(Error::InsufficientData("empty ratings table".into()));
    }
    let mut notes = Vec::new();

    let mut by_condition: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in table.rows() {
        by_condition.entry(&r.condition).or_default().push(f64::from(r.score));
    }
    let conditions = by_condition
        .into_iter()
        .map(|(c, scores)| Ok((c.to_owned(), describe(&scores)?)))
        .collect::<Result<_>>()?;

    let krippendorff_alpha = match agreement(table, options.agreement_unit) {
        Ok(a) => Some(a),
        Err(e) => {
            notes.push(format!("krippendorff_alpha: {e}"));
            None
        }
    };

    let systems = system_conditions(table);
    let permutation_counts = match systems.as_slice() {
        [a, b, c] => Some(ranking_permutations(table, [a, b, c])?),
        _ => {
            notes.push(format!(
                "permutation_counts: need exactly 3 systems, found {}",
                systems.len()
            ));
            None
        }
    };

    let mut subgroups = Vec::new();
    for field in super::ratings::DEMOGRAPHIC_FIELDS {
        let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (rater, info) in table.raters() {
            if let Some(v) = info.demographics.get(field) {
                groups.entry(v).or_default().push(rater);
            }
        }
        for (value, raters) in groups {
            let sub = table.with_raters(raters.iter().copied());
            let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
            for r in sub.rows() {
                let e = sums.entry(r.condition.clone()).or_default();
                e.0 += f64::from(r.score);
                e.1 += 1;
            }
            subgroups.push(SubgroupSummary {
                field: field.to_owned(),
                value: value.to_owned(),
                raters: raters.len(),
                condition_means: sums.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect(),
                tests: pairwise_tests(&sub, options),
            });
        }
    }

    Ok(AnalysisReport {
        options: options.clone(),
        screening: Screening::default(),
        conditions,
        rater_means: table.rater_means(),
        pairwise: pairwise_tests(table, options),
        krippendorff_alpha,
        permutation_counts,
        correlations: BTreeMap::new(),
        subgroups,
        notes,
    })
}

/// Correlates mean listener ratings with each metric in `report`.
pub fn correlate_metrics(
    table: &RatingsTable,
    report: &MetricReport,
) -> (BTreeMap<String, MetricCorrelation>, Vec<String>) {
    let mut sums: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
    for r in table.rows() {
        let e = sums.entry((&r.condition, &r.item)).or_default();
        e.0 += f64::from(r.score);
        e.1 += 1;
    }
    let item_mean: BTreeMap<(&str, &str), f64> =
        sums.iter().map(|(k, (s, n))| (*k, s / *n as f64)).collect();
    let mut system_sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in table.rows() {
        let e = system_sums.entry(&r.condition).or_default();
        e.0 += f64::from(r.score);
        e.1 += 1;
    }

    let metrics: BTreeSet<&str> = report
        .systems
        .values()
        .flat_map(|m| m.iter().filter(|(_, v)| v.is_some()).map(|(k, _)| k.as_str()))
        .chain(report.per_item.values().flat_map(|items| {
            items.values().flat_map(|m| m.keys().map(String::as_str))
        }))
        .collect();

    let mut out = BTreeMap::new();
    let mut notes = Vec::new();
    for metric in metrics {
        let (mut ratings, mut values) = (Vec::new(), Vec::new());
        for (system, items) in &report.per_item {
            for (item, m) in items {
                if let (Some(v), Some(r)) = (m.get(metric), item_mean.get(&(system.as_str(), item.as_str()))) {
                    values.push(*v);
                    ratings.push(*r);
                }
            }
        }
        let mut level = "per_item";
        if ratings.len() < 3 {
            ratings.clear();
            values.clear();
            level = "per_system";
            for (system, (s, n)) in &system_sums {
                if let Some(v) = report.get(system, metric) {
                    values.push(v);
                    ratings.push(s / *n as f64);
                }
            }
        }
        match correlate(&ratings, &values) {
            Ok(correlation) => {
                out.insert(
                    metric.to_owned(),
                    MetricCorrelation {
                        level: level.to_owned(),
                        correlation,
                    },
                );
            }
            Err(e) => notes.push(format!("correlation {metric}: {e}")),
        }
    }
    (out, notes)
}

/// Screens raters, then summarizes the kept cohort and relates it to `metrics`.
pub fn analyze(
    table: &RatingsTable,
    metrics: Option<&MetricReport>,
    options: &AnalysisOptions,
) -> Result<AnalysisReport> {
    let screening = screen_raters(table, options.threshold);
    let kept = table.with_raters(screening.kept.iter().map(String::as_str));
    let mut report = if kept.is_empty() {
        AnalysisReport {
            options: options.clone(),
            screening: Screening::default(),
            conditions: BTreeMap::new(),
            rater_means: BTreeMap::new(),
            pairwise: Vec::new(),
            krippendorff_alpha: None,
            permutation_counts: None,
            correlations: BTreeMap::new(),
            subgroups: Vec::new(),
            notes: vec!["zero raters kept after screening".to_owned()],
        }
    } else {
        summarize(&kept, options)?
    };
    report.screening = screening;
    if let (Some(metrics), false) = (metrics, kept.is_empty()) {
        let (correlations, notes) = correlate_metrics(&kept, metrics);
        report.correlations = correlations;
        report.notes.extend(notes);
    }
    Ok(report)
}

/// Per-condition rating distribution as `condition,rater,mean_score` rows.
pub fn write_plot_data(report: &AnalysisReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["condition", "rater", "mean_score"])
        .map_err(csv_error)?;
    let mut rows: Vec<(&str, &str, f64)> = Vec::new();
    for (rater, means) in &report.rater_means {
        for (condition, mean) in means {
            rows.push((condition, rater, *mean));
        }
    }
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for (c, r, m) in rows {
        w.write_record([c, r, &m.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
