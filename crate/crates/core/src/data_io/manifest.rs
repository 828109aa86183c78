use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub id: String,
    pub midi_note: i32,
    #[serde(default)]
    pub instrument_family: String,
    pub reference: PathBuf,
    /// System name → generated audio for this item.
    pub conditions: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySettings {
    pub trials_per_session: usize,
    pub midi_min: i32,
    pub midi_max: i32,
    pub screening_threshold: f64,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            trials_per_session: 10,
            midi_min: 22,
            midi_max: 84,
            screening_threshold: 85.0,
        }
    }
}

/// Stimulus pool and study settings. Paths are absolute after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub items: Vec<ManifestItem>,
    #[serde(default)]
    pub settings: StudySettings,
}

impl StudyManifest {
    /// System names shared by every item (sorted).
    pub fn condition_names(&self) -> Vec<String> {
        self.items
            .first()
            .map(|item| item.conditions.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn item(&self, id: &str) -> Option<&ManifestItem> {
        self.items.iter().find(|item| item.id == id)
    }

    /// Items whose MIDI note lies within the configured bounds, in manifest order.
    pub fn eligible_items(&self) -> impl Iterator<Item = &ManifestItem> {
        let (lo, hi) = (self.settings.midi_min, self.settings.midi_max);
        self.items
            .iter()
            .filter(move |item| (lo..=hi).contains(&item.midi_note))
    }

    /// Checks every invariant except file existence.
    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if s.midi_min > s.midi_max {
            return Err(Error::Manifest(format!(
                "midi_min {} > midi_max {}",
                s.midi_min, s.midi_max
            )));
        }
        if !(0.0..=100.0).contains(&s.screening_threshold) {
            return Err(Error::Manifest(format!(
                "screening_threshold {} outside [0, 100]",
                s.screening_threshold
            )));
        }
        if s.trials_per_session == 0 {
            return Err(Error::Manifest("trials_per_session must be positive".into()));
        }
        let mut ids = HashSet::new();
        for item in &self.items {
            if !ids.insert(item.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate id {:?}", item.id)));
            }
        }
        if let Some(first) = self.items.first() {
            let expected: BTreeSet<_> = first.conditions.keys().collect();
            for item in &self.items[1..] {
                let names: BTreeSet<_> = item.conditions.keys().collect();
                if names != expected {
                    return Err(Error::Manifest(format!(
                        "inconsistent conditions: item {:?} has {:?}, item {:?} has {:?}",
                        item.id, names, first.id, expected
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        for item in &mut self.items {
            item.reference = base.join(&item.reference);
            for path in item.conditions.values_mut() {
                *path = base.join(&*path);
            }
        }
    }

    fn check_files(&self) -> Result<()> {
        for item in &self.items {
            let files = std::iter::once(("reference", &item.reference))
                .chain(item.conditions.iter().map(|(k, v)| (k.as_str(), v)));
            for (role, path) in files {
                if !path.is_file() {
                    return Err(Error::Manifest(format!(
                        "missing audio file for item {:?} ({role}): {}",
                        item.id,
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<StudyManifest> {
    let mut manifest: StudyManifest = serde_json::from_str(text)?;
    manifest.validate()?;
    manifest.resolve_paths(base_dir);
    manifest.check_files()?;
    Ok(manifest)
}

/// Loads and validates a manifest; relative paths resolve against its directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<StudyManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}
