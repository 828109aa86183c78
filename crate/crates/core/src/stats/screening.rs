use std::fmt;

use serde::{Deserialize, Serialize};

use super::ratings::{RatingsTable, REFERENCE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RemovalReason {
    IncompleteSession,
    NoReferenceRatings,
    LowReferenceMean { mean: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub rater: String,
    #[serde(flatten)]
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Screening {
    pub kept: Vec<String>,
    pub removed: Vec<Removal>,
}

/// Drops raters with incomplete sessions, then raters whose mean hidden
/// reference score is strictly below `threshold`.
pub fn screen_raters(table: &RatingsTable, threshold: f64) -> Screening {
    let means = table.rater_means();
    let mut out = Screening::default();
    for (rater, info) in table.raters() {
        let reason = if !info.complete {
            Some(RemovalReason::IncompleteSession)
        } else {
            match means.get(rater).and_then(|m| m.get(REFERENCE)) {
                None => Some(RemovalReason::NoReferenceRatings),
                Some(&mean) if mean < threshold => Some(RemovalReason::LowReferenceMean { mean }),
                Some(_) => None,
            }
        };
        match reason {
            Some(reason) => out.removed.push(Removal {
                rater: rater.clone(),
                reason,
            }),
            None => out.kept.push(rater.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Bad,
    Poor,
    Fair,
    Good,
    Excellent,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Bad => "bad",
            Band::Poor => "poor",
            Band::Fair => "fair",
            Band::Good => "good",
            Band::Excellent => "excellent",
        })
    }
}

/// MUSHRA quality band: half-open 20-point bands, with 100 closing "excellent".
pub fn mushra_band(score: f64) -> Result<Band> {
    if !(0.0..=100.0).contains(&score) {
        return Err(Error::InvalidParameter(format!("score {score} out of range")));
    }
    Ok(match score {
        s if s < 20.0 => Band::Bad,
        s if s < 40.0 => Band::Poor,
        s if s < 60.0 => Band::Fair,
        s if s < 80.0 => Band::Good,
        _ => Band::Excellent,
    })
}
