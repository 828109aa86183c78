use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition name of the hidden reference in exports and tables.
pub const REFERENCE: &str = "reference";
/// Condition name of the anchor in exports and tables.
pub const ANCHOR: &str = "anchor";

/// Demographic fields recorded per session, in export column order.
pub const DEMOGRAPHIC_FIELDS: [&str; 4] = [
    "age_bracket",
    "production_familiarity",
    "synthesis_knowledge",
    "equipment_spend",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub rater: String,
    pub item: String,
    pub condition: String,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RaterInfo {
    pub demographics: BTreeMap<String, String>,
    pub complete: bool,
}

/// Slider ratings keyed by `(rater, item, condition)`.
#[derive(Debug, Clone, Default)]
pub struct RatingsTable {
    rows: Vec<Rating>,
    raters: BTreeMap<String, RaterInfo>,
    keys: HashSet<(String, String, String)>,
}

impl RatingsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_rater(&mut self, rater: impl Into<String>, info: RaterInfo) {
        self.raters.insert(rater.into(), info);
    }

    /// Adds a rating; an unseen rater is registered as complete with no demographics.
    pub fn push(&mut self, rating: Rating) -> Result<()> {
        if rating.score > 100 {
            return Err(Error::InvalidParameter(format!(
                "score {} out of range",
                rating.score
            )));
        }
        let key = (
            rating.rater.clone(),
            rating.item.clone(),
            rating.condition.clone(),
        );
        if !self.keys.insert(key) {
            return Err(Error::InvalidParameter(format!(
                "duplicate rating for rater {:?}, item {:?}, condition {:?}",
                rating.rater, rating.item, rating.condition
            )));
        }
        self.raters
            .entry(rating.rater.clone())
            .or_insert_with(|| RaterInfo {
                complete: true,
                ..RaterInfo::default()
            });
        self.rows.push(rating);
        Ok(())
    }

    pub fn rate(&mut self, rater: &str, item: &str, condition: &str, score: u8) -> Result<()> {
        self.push(Rating {
            rater: rater.into(),
            item: item.into(),
            condition: condition.into(),
            score,
        })
    }

    pub fn rows(&self) -> &[Rating] {
        &self.rows
    }

    pub fn raters(&self) -> &BTreeMap<String, RaterInfo> {
        &self.raters
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn conditions(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.condition.as_str()).collect()
    }

    /// Sub-table restricted to the given raters.
    pub fn with_raters<'a>(&self, keep: impl IntoIterator<Item = &'a str>) -> RatingsTable {
        let keep: HashSet<&str> = keep.into_iter().collect();
        let mut out = RatingsTable::new();
        for (id, info) in &self.raters {
            if keep.contains(id.as_str()) {
                out.add_rater(id.clone(), info.clone());
            }
        }
        for row in self.rows.iter().filter(|r| keep.contains(r.rater.as_str())) {
            out.push(row.clone()).expect("rows are already unique");
        }
        out
    }

    /// `(rater, item)` → condition → score.
    pub fn responses(&self) -> BTreeMap<(&str, &str), BTreeMap<&str, u8>> {
        let mut out: BTreeMap<(&str, &str), BTreeMap<&str, u8>> = BTreeMap::new();
        for r in &self.rows {
            out.entry((r.rater.as_str(), r.item.as_str()))
                .or_default()
                .insert(r.condition.as_str(), r.score);
        }
        out
    }

    /// rater → condition → mean score.
    pub fn rater_means(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        let mut acc: BTreeMap<&str, BTreeMap<&str, (f64, usize)>> = BTreeMap::new();
        for r in &self.rows {
            let e = acc
                .entry(&r.rater)
                .or_default()
                .entry(&r.condition)
                .or_insert((0.0, 0));
            e.0 += f64::from(r.score);
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(rater, conds)| {
                let means = conds
                    .into_iter()
                    .map(|(c, (sum, n))| (c.to_owned(), sum / n as f64))
                    .collect();
                (rater.to_owned(), means)
            })
            .collect()
    }

    /// Parses the study service CSV export.
    pub fn from_export_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut table = RatingsTable::new();
        for (i, record) in reader.deserialize::<ExportRow>().enumerate() {
            let fallback = i as u64 + 2;
            let row = record.map_err(|e| Error::Parse {
                line: e.position().map_or(fallback, |p| p.line()),
                message: e.to_string(),
            })?;
            let demographics = DEMOGRAPHIC_FIELDS
                .iter()
                .zip([
                    &row.age_bracket,
                    &row.production_familiarity,
                    &row.synthesis_knowledge,
                    &row.equipment_spend,
                ])
                .map(|(k, v)| ((*k).to_owned(), v.clone()))
                .collect();
            table.raters.entry(row.session.clone()).or_insert(RaterInfo {
                demographics,
                complete: row.session_complete,
            });
            table
                .push(Rating {
                    rater: row.session,
                    item: row.item,
                    condition: row.condition,
                    score: row.score,
                })
                .map_err(|e| Error::Parse {
                    line: fallback,
                    message: e.to_string(),
                })?;
        }
        Ok(table)
    }

    /// Parses the study service JSON export.
    pub fn from_export_json(text: &str) -> Result<Self> {
        let export: ExportDocument = serde_json::from_str(text)?;
        let mut table = RatingsTable::new();
        for session in export.sessions {
            table.add_rater(
                session.id.clone(),
                RaterInfo {
                    demographics: session.demographics,
                    complete: session.complete,
                },
            );
            for response in session.responses {
                for rating in response.ratings {
                    table.push(Rating {
                        rater: session.id.clone(),
                        item: response.item_id.clone(),
                        condition: rating.condition,
                        score: rating.score,
                    })?;
                }
            }
        }
        Ok(table)
    }

    /// Loads an export, choosing JSON or CSV by content.
    pub fn load_export(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        if text.trim_start().starts_with('{') {
            Self::from_export_json(&text)
        } else {
            Self::from_export_csv(&text)
        }
    }
}

/// One CSV export row: a single slider rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub session: String,
    pub age_bracket: String,
    pub production_familiarity: String,
    pub synthesis_knowledge: String,
    pub equipment_spend: String,
    pub session_complete: bool,
    pub trial: usize,
    pub item: String,
    pub condition: String,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub trials_per_session: usize,
    pub sessions: Vec<ExportSession>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportSession {
    pub id: String,
    pub demographics: BTreeMap<String, String>,
    pub created_at: String,
    pub completed: usize,
    pub complete: bool,
    pub assigned_items: Vec<String>,
    pub responses: Vec<ExportResponse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportResponse {
    pub trial_index: usize,
    pub item_id: String,
    pub submitted_at: String,
    pub ratings: Vec<ExportRating>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRating {
    pub condition: String,
    pub score: u8,
}
