use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MSE: &str = "mse";
pub const MAE: &str = "mae";
pub const MULTI_SCALE: &str = "multi_scale_distance";
pub const NDB_RATIO: &str = "ndb_ratio";
pub const PITCH_IS: &str = "pitch_inception_score";
pub const INSTRUMENT_IS: &str = "instrument_inception_score";
pub const PITCH_KID: &str = "pitch_kid";
pub const INSTRUMENT_KID: &str = "instrument_kid";
pub const FAD: &str = "fad";

/// Every metric a report carries, in presentation order.
pub const ALL_METRICS: [&str; 9] = [
    NDB_RATIO,
    PITCH_KID,
    INSTRUMENT_KID,
    PITCH_IS,
    INSTRUMENT_IS,
    MSE,
    MAE,
    FAD,
    MULTI_SCALE,
];

/// Objective results per system. `None` marks a metric skipped for missing
/// inputs; the reason is kept in `skipped`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub systems: BTreeMap<String, BTreeMap<String, Option<f64>>>,
    #[serde(default)]
    pub skipped: BTreeMap<String, BTreeMap<String, String>>,
    /// system → item id → metric → value, for sample-level metrics.
    #[serde(default)]
    pub per_item: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl MetricReport {
    pub fn set(&mut self, system: &str, metric: &str, value: f64) -> Result<()> {
        check_value(metric, value)?;
        self.systems
            .entry(system.to_owned())
            .or_default()
            .insert(metric.to_owned(), Some(value));
        if let Some(s) = self.skipped.get_mut(system) {
            s.remove(metric);
        }
        Ok(())
    }

    pub fn skip(&mut self, system: &str, metric: &str, reason: impl Into<String>) {
        self.systems
            .entry(system.to_owned())
            .or_default()
            .insert(metric.to_owned(), None);
        self.skipped
            .entry(system.to_owned())
            .or_default()
            .insert(metric.to_owned(), reason.into());
    }

    pub fn get(&self, system: &str, metric: &str) -> Option<f64> {
        self.systems.get(system)?.get(metric).copied().flatten()
    }

    pub fn computed_count(&self) -> usize {
        self.systems
            .values()
            .flat_map(|m| m.values())
            .filter(|v| v.is_some())
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        for metrics in self.systems.values() {
            for (name, value) in metrics {
                if let Some(v) = value {
                    check_value(name, *v)?;
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let report: MetricReport = serde_json::from_str(&text)?;
        report.validate()?;
        Ok(report)
    }
}

fn check_value(metric: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("metric {metric}")));
    }
    let ok = match metric {
        NDB_RATIO => (0.0..=1.0).contains(&value),
        FAD | MSE | MAE | MULTI_SCALE => value >= 0.0,
        PITCH_IS | INSTRUMENT_IS => value >= 1.0,
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{metric} = {value} out of range")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let mut r = MetricReport::default();
        r.set("ddsp", MSE, 0.013).unwrap();
        r.skip("ddsp", FAD, "no embeddings");
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["systems"]["ddsp"]["mse"], 0.013);
        assert!(v["systems"]["ddsp"]["fad"].is_null());
        assert_eq!(v["skipped"]["ddsp"]["fad"], "no embeddings");
        assert_eq!(r.computed_count(), 1);
    }

    #[test]
    fn range_checks() {
        let mut r = MetricReport::default();
        assert!(r.set("x", NDB_RATIO, 1.5).is_err());
        assert!(r.set("x", FAD, -0.1).is_err());
        assert!(r.set("x", PITCH_IS, 0.5).is_err());
        assert!(r.set("x", PITCH_KID, -0.001).is_ok());
    }
}
