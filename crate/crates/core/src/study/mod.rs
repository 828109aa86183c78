//! MUSHRA-style listening study: session assignment, blind trials, rating
//! collection with write-ahead persistence, and export.
//!
//! Clients only ever see opaque slider ids and audio tokens. Both are
//! HMAC-SHA256 digests of `(session, item, condition, purpose)` under a key
//! kept in the data directory, so they are stable across restarts and
//! reveal nothing about the condition behind them.

mod config;
mod http;
mod log;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use hmac::{Hmac, Mac};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use self::config::{StudyConfig, DEFAULT_ADMIN_SECRET_ENV};
pub use self::http::{router, serve, serve_with_shutdown, ADMIN_HEADER};
pub use self::log::{Event, EventLog};
use crate::audio::{encode_wav16, make_anchor, read_wav, write_wav16};
use crate::data_io::{load_manifest, StudyManifest, StudySettings};
use crate::stats::{
    ExportDocument, ExportRating, ExportResponse, ExportRow, ExportSession, ANCHOR,
    DEMOGRAPHIC_FIELDS, REFERENCE,
};

/// Number of system conditions rated alongside the hidden reference and anchor.
pub const SYSTEMS_PER_TRIAL: usize = 3;
pub const SLIDERS_PER_TRIAL: usize = SYSTEMS_PER_TRIAL + 2;

pub const AGE_BRACKETS: [&str; 4] = ["under_18", "18-24", "25-50", "over_50"];
pub const FAMILIARITY_LEVELS: [&str; 5] = ["none", "slightly", "moderately", "very", "extremely"];
pub const SPEND_BRACKETS: [&str; 4] = ["under_250", "250_500", "500_750", "over_750"];

/// Allowed answers for a demographic field.
pub fn demographic_choices(field: &str) -> Option<&'static [&'static str]> {
    match field {
        "age_bracket" => Some(&AGE_BRACKETS),
        "production_familiarity" | "synthesis_knowledge" => Some(&FAMILIARITY_LEVELS),
        "equipment_spend" => Some(&SPEND_BRACKETS),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("unauthorized")]
    Unauthorized,
    #[error(transparent)]
    Internal(#[from] crate::Error),
}

pub type StudyResult<T> = std::result::Result<T, StudyError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub trials_per_session: usize,
    pub completed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliderView {
    pub slider_id: String,
    pub audio_url: String,
}

/// A trial as the client sees it: no item id, no condition names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialView {
    /// `None` for the practice trial.
    pub trial_index: Option<usize>,
    pub trials_per_session: usize,
    pub reference_url: String,
    pub sliders: Vec<SliderView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitAck {
    pub completed: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Source {
    /// The explicit, labelled reference.
    Reference,
    /// The hidden reference behind one of the sliders.
    HiddenReference,
    Anchor,
    System(String),
}

impl Source {
    fn condition(&self) -> &str {
        match self {
            Source::Reference | Source::HiddenReference => REFERENCE,
            Source::Anchor => ANCHOR,
            Source::System(s) => s,
        }
    }
}

struct Session {
    id: String,
    demographics: BTreeMap<String, String>,
    assigned_items: Vec<String>,
    practice_item: String,
    created_at: String,
    responses: Vec<ExportResponse>,
}

struct Inner {
    sessions: HashMap<String, Session>,
    order: Vec<String>,
    /// audio token → (item, source)
    tokens: HashMap<String, (String, Source)>,
    log: EventLog,
    rng: ChaCha8Rng,
}

pub struct Study {
    manifest: StudyManifest,
    systems: Vec<String>,
    key: Vec<u8>,
    admin_digest: [u8; 32],
    anchor_dir: PathBuf,
    inner: Mutex<Inner>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn sha256(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

fn anchor_file_name(item: &str) -> String {
    format!("{}.wav", &hex::encode(sha256(item.as_bytes()))[..32])
}

fn load_or_create_key(path: &Path) -> crate::Result<Vec<u8>> {
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::file(path, e))?;
        return hex::decode(text.trim())
            .map_err(|e| crate::Error::InvalidParameter(format!("token key {}: {e}", path.display())));
    }
    let key: [u8; 32] = rand::rng().random();
    std::fs::write(path, hex::encode(key)).map_err(|e| crate::Error::file(path, e))?;
    Ok(key.to_vec())
}

impl Study {
    /// Loads the manifest named by `config`, pre-renders anchors and replays
    /// the event log found in the data directory.
    pub fn open(config: &StudyConfig, admin_secret: &str) -> crate::Result<Self> {
        let mut manifest = load_manifest(&config.manifest)?;
        let s = &mut manifest.settings;
        s.trials_per_session = config.trials_per_session.unwrap_or(s.trials_per_session);
        s.midi_min = config.midi_min.unwrap_or(s.midi_min);
        s.midi_max = config.midi_max.unwrap_or(s.midi_max);
        s.screening_threshold = config.screening_threshold.unwrap_or(s.screening_threshold);
        Self::from_manifest(manifest, &config.data_dir, admin_secret, config.seed)
    }

    pub fn from_manifest(
        manifest: StudyManifest,
        data_dir: &Path,
        admin_secret: &str,
        seed: Option<u64>,
    ) -> crate::Result<Self> {
        manifest.validate()?;
        if admin_secret.is_empty() {
            return Err(crate::Error::InvalidParameter("empty admin secret".into()));
        }
        let systems = manifest.condition_names();
        if systems.len() != SYSTEMS_PER_TRIAL {
            return Err(crate::Error::Manifest(format!(
                "the study needs exactly {SYSTEMS_PER_TRIAL} system conditions, manifest has {}",
                systems.len()
            )));
        }
        if let Some(bad) = systems.iter().find(|s| *s == REFERENCE || *s == ANCHOR) {
            return Err(crate::Error::Manifest(format!("condition name {bad:?} is reserved")));
        }

        std::fs::create_dir_all(data_dir).map_err(|e| crate::Error::file(data_dir, e))?;
        let key = load_or_create_key(&data_dir.join("token.key"))?;
        let anchor_dir = data_dir.join("anchors");
        std::fs::create_dir_all(&anchor_dir).map_err(|e| crate::Error::file(&anchor_dir, e))?;
        for item in &manifest.items {
            let anchor = make_anchor(&read_wav(&item.reference)?)?;
            write_wav16(anchor_dir.join(anchor_file_name(&item.id)), &anchor)?;
        }

        let (log, events) = EventLog::open(data_dir.join("events.jsonl"))?;
        let rng = match seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_rng(&mut rand::rng()),
        };
        let study = Study {
            manifest,
            systems,
            key,
            admin_digest: sha256(admin_secret.as_bytes()),
            anchor_dir,
            inner: Mutex::new(Inner {
                sessions: HashMap::new(),
                order: Vec::new(),
                tokens: HashMap::new(),
                log,
                rng,
            }),
        };
        {
            let mut inner = study.inner.lock().unwrap();
            for event in events {
                study.apply(&mut inner, event)?;
            }
        }
        Ok(study)
    }

    pub fn settings(&self) -> &StudySettings {
        &self.manifest.settings
    }

    pub fn manifest(&self) -> &StudyManifest {
        &self.manifest
    }

    pub fn session_count(&self) -> usize {
        self.inner.lock().unwrap().order.len()
    }

    fn digest(&self, parts: &[&str]) -> String {
        let mut mac = Hmac::<Sha256>::new_from_slice(&self.key).expect("any key length");
        for p in parts {
            mac.update(&(p.len() as u64).to_le_bytes());
            mac.update(p.as_bytes());
        }
        hex::encode(&mac.finalize().into_bytes()[..16])
    }

    fn slider_id(&self, session: &str, item: &str, condition: &str) -> String {
        self.digest(&[session, item, condition, "slider"])
    }

    fn audio_token(&self, session: &str, item: &str, source: &Source) -> String {
        let purpose = match source {
            Source::Reference => "explicit",
            _ => "audio",
        };
        self.digest(&[session, item, source.condition(), purpose])
    }

    fn sources(&self) -> Vec<Source> {
        let mut v = vec![Source::Reference, Source::HiddenReference, Source::Anchor];
        v.extend(self.systems.iter().cloned().map(Source::System));
        v
    }

    fn apply(&self, inner: &mut Inner, event: Event) -> crate::Result<()> {
        match event {
            Event::SessionCreated {
                id,
                demographics,
                assigned_items,
                practice_item,
                created_at,
            } => {
                for item in assigned_items.iter().chain([&practice_item]) {
                    for source in self.sources() {
                        let token = self.audio_token(&id, item, &source);
                        inner.tokens.insert(token, (item.clone(), source));
                    }
                }
                inner.order.push(id.clone());
                inner.sessions.insert(
                    id.clone(),
                    Session {
                        id,
                        demographics,
                        assigned_items,
                        practice_item,
                        created_at,
                        responses: Vec::new(),
                    },
                );
            }
            Event::ResponseSubmitted {
                session,
                trial_index,
                item_id,
                ratings,
                submitted_at,
            } => {
                let s = inner.sessions.get_mut(&session).ok_or_else(|| {
                    crate::Error::InvalidParameter(format!("event log: response for unknown session {session}"))
                })?;
                s.responses.push(ExportResponse {
                    trial_index,
                    item_id,
                    submitted_at,
                    ratings,
                });
            }
        }
        Ok(())
    }

    fn persist(&self, inner: &mut Inner, event: Event) -> StudyResult<()> {
        inner.log.append(&event)?;
        self.apply(inner, event)?;
        Ok(())
    }

    pub fn create_session(&self, demographics: BTreeMap<String, String>) -> StudyResult<SessionInfo> {
        for field in DEMOGRAPHIC_FIELDS {
            let value = demographics
                .get(field)
                .ok_or_else(|| StudyError::Invalid(format!("missing demographic field {field}")))?;
            let allowed = demographic_choices(field).expect("known field");
            if !allowed.contains(&value.as_str()) {
                return Err(StudyError::Invalid(format!(
                    "invalid value {value:?} for {field}; expected one of {allowed:?}"
                )));
            }
        }
        if let Some(extra) = demographics.keys().find(|k| !DEMOGRAPHIC_FIELDS.contains(&k.as_str())) {
            return Err(StudyError::Invalid(format!("unknown demographic field {extra}")));
        }

        let trials = self.settings().trials_per_session;
        let pool: Vec<&str> = self.manifest.eligible_items().map(|i| i.id.as_str()).collect();
        if pool.len() < trials {
            return Err(StudyError::Conflict(format!(
                "insufficient pool: {} eligible items for {trials} trials",
                pool.len()
            )));
        }

        let mut inner = self.inner.lock().unwrap();
        let assigned: Vec<String> = pool
            .choose_multiple(&mut inner.rng, trials)
            .map(|s| (*s).to_owned())
            .collect();
        let practice_item = pool
            .iter()
            .find(|id| !assigned.iter().any(|a| a == *id))
            .copied()
            .unwrap_or(pool[0])
            .to_owned();
        let id = hex::encode(rand::rng().random::<[u8; 16]>());
        self.persist(
            &mut inner,
            Event::SessionCreated {
                id: id.clone(),
                demographics,
                assigned_items: assigned,
                practice_item,
                created_at: now(),
            },
        )?;
        Ok(SessionInfo {
            session_id: id,
            trials_per_session: trials,
            completed: 0,
        })
    }

    fn trial_view(&self, inner: &mut Inner, session: &str, item: &str, index: Option<usize>) -> TrialView {
        let url = |token: String| format!("/api/audio/{token}.wav");
        let mut sliders: Vec<SliderView> = self.sources()[1..]
            .iter()
            .map(|source| SliderView {
                slider_id: self.slider_id(session, item, source.condition()),
                audio_url: url(self.audio_token(session, item, source)),
            })
            .collect();
        sliders.shuffle(&mut inner.rng);
        TrialView {
            trial_index: index,
            trials_per_session: self.settings().trials_per_session,
            reference_url: url(self.audio_token(session, item, &Source::Reference)),
            sliders,
        }
    }

    pub fn session_info(&self, session_id: &str) -> StudyResult<SessionInfo> {
        let inner = self.inner.lock().unwrap();
        let s = inner
            .sessions
            .get(session_id)
            .ok_or_else(|| StudyError::NotFound("unknown session".into()))?;
        Ok(SessionInfo {
            session_id: s.id.clone(),
            trials_per_session: s.assigned_items.len(),
            completed: s.responses.len(),
        })
    }

    pub fn next_trial(&self, session_id: &str) -> StudyResult<TrialView> {
        let mut inner = self.inner.lock().unwrap();
        let s = inner
            .sessions
            .get(session_id)
            .ok_or_else(|| StudyError::NotFound("unknown session".into()))?;
        let index = s.responses.len();
        let Some(item) = s.assigned_items.get(index).cloned() else {
            return Err(StudyError::Conflict("study complete".into()));
        };
        Ok(self.trial_view(&mut inner, session_id, &item, Some(index)))
    }

    /// The non-recorded training trial.
    pub fn practice_trial(&self, session_id: &str) -> StudyResult<TrialView> {
        let mut inner = self.inner.lock().unwrap();
        let item = inner
            .sessions
            .get(session_id)
            .ok_or_else(|| StudyError::NotFound("unknown session".into()))?
            .practice_item
            .clone();
        Ok(self.trial_view(&mut inner, session_id, &item, None))
    }

    pub fn submit(
        &self,
        session_id: &str,
        trial_index: usize,
        ratings: &BTreeMap<String, i64>,
    ) -> StudyResult<SubmitAck> {
        let mut inner = self.inner.lock().unwrap();
        let s = inner
            .sessions
            .get(session_id)
            .ok_or_else(|| StudyError::NotFound("unknown session".into()))?;
        let completed = s.responses.len();
        let total = s.assigned_items.len();
        if trial_index < completed {
            return Err(StudyError::Conflict("already submitted".into()));
        }
        if completed == total {
            return Err(StudyError::Conflict("study complete".into()));
        }
        if trial_index > completed {
            return Err(StudyError::Conflict(format!(
                "out of order: expected trial {completed}, got {trial_index}"
            )));
        }
        let item = s.assigned_items[trial_index].clone();
        let sources = self.sources();
        let by_slider: HashMap<String, &str> = sources[1..]
            .iter()
            .map(|src| (self.slider_id(session_id, &item, src.condition()), src.condition()))
            .collect();

        if let Some((_, score)) = ratings.iter().find(|(_, v)| !(0..=100).contains(*v)) {
            return Err(StudyError::Invalid(format!("score out of range: {score}")));
        }
        if let Some(unknown) = ratings.keys().find(|k| !by_slider.contains_key(*k)) {
            return Err(StudyError::Invalid(format!("unknown slider_id {unknown}")));
        }
        if ratings.len() != SLIDERS_PER_TRIAL {
            return Err(StudyError::Invalid(format!(
                "expected {SLIDERS_PER_TRIAL} ratings, got {}",
                ratings.len()
            )));
        }
        let mut stored: Vec<ExportRating> = ratings
            .iter()
            .map(|(slider, score)| ExportRating {
                condition: by_slider[slider].to_owned(),
                score: *score as u8,
            })
            .collect();
        stored.sort_by(|a, b| a.condition.cmp(&b.condition));

        self.persist(
            &mut inner,
            Event::ResponseSubmitted {
                session: session_id.to_owned(),
                trial_index,
                item_id: item,
                ratings: stored,
                submitted_at: now(),
            },
        )?;
        Ok(SubmitAck {
            completed: completed + 1,
            remaining: total - completed - 1,
        })
    }

    /// Canonical 16-bit WAV bytes behind an audio token.
    pub fn audio(&self, token: &str) -> StudyResult<Vec<u8>> {
        let (item, source) = self
            .inner
            .lock()
            .unwrap()
            .tokens
            .get(token)
            .cloned()
            .ok_or_else(|| StudyError::NotFound("unknown audio token".into()))?;
        let entry = self.manifest.item(&item).expect("tokens only name manifest items");
        let bytes = match source {
            Source::Anchor => {
                let path = self.anchor_dir.join(anchor_file_name(&item));
                std::fs::read(&path).map_err(|e| crate::Error::file(&path, e))?
            }
            Source::Reference | Source::HiddenReference => encode_wav16(&read_wav(&entry.reference)?)?,
            Source::System(name) => encode_wav16(&read_wav(&entry.conditions[&name])?)?,
        };
        Ok(bytes)
    }

    pub fn check_admin(&self, secret: Option<&str>) -> StudyResult<()> {
        let given = sha256(secret.unwrap_or_default().as_bytes());
        let diff = given.iter().zip(&self.admin_digest).fold(0u8, |acc, (a, b)| acc | (a ^ b));
        if secret.is_none() || diff != 0 {
            return Err(StudyError::Unauthorized);
        }
        Ok(())
    }

    pub fn export_document(&self) -> ExportDocument {
        let inner = self.inner.lock().unwrap();
        let trials = self.settings().trials_per_session;
        ExportDocument {
            trials_per_session: trials,
            sessions: inner
                .order
                .iter()
                .map(|id| {
                    let s = &inner.sessions[id];
                    ExportSession {
                        id: s.id.clone(),
                        demographics: s.demographics.clone(),
                        created_at: s.created_at.clone(),
                        completed: s.responses.len(),
                        complete: s.responses.len() >= s.assigned_items.len(),
                        assigned_items: s.assigned_items.clone(),
                        responses: s.responses.clone(),
                    }
                })
                .collect(),
        }
    }

    pub fn export_csv(&self) -> crate::Result<String> {
        let doc = self.export_document();
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        let io = |e: csv::Error| crate::Error::Io(std::io::Error::other(e));
        w.write_record([
            "session",
            "age_bracket",
            "production_familiarity",
            "synthesis_knowledge",
            "equipment_spend",
            "session_complete",
            "trial",
            "item",
            "condition",
            "score",
        ])
        .map_err(io)?;
        for s in &doc.sessions {
            let demo = |k: &str| s.demographics.get(k).cloned().unwrap_or_default();
            for r in &s.responses {
                for rating in &r.ratings {
                    w.serialize(ExportRow {
                        session: s.id.clone(),
                        age_bracket: demo("age_bracket"),
                        production_familiarity: demo("production_familiarity"),
                        synthesis_knowledge: demo("synthesis_knowledge"),
                        equipment_spend: demo("equipment_spend"),
                        session_complete: s.complete,
                        trial: r.trial_index,
                        item: r.item_id.clone(),
                        condition: rating.condition.clone(),
                        score: rating.score,
                    })
                    .map_err(io)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}
