use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ADMIN_SECRET_ENV: &str = "NASEVAL_ADMIN_SECRET";

/// Study service configuration, read from TOML. Relative paths resolve
/// against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub manifest: PathBuf,
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_secret_env")]
    pub admin_secret_env: String,
    /// Event log, HMAC key and pre-rendered anchors live here.
    pub data_dir: PathBuf,
    /// Static frontend bundle, served at `/` when present.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    // Optional overrides of the manifest's study settings.
    #[serde(default)]
    pub trials_per_session: Option<usize>,
    #[serde(default)]
    pub midi_min: Option<i32>,
    #[serde(default)]
    pub midi_max: Option<i32>,
    #[serde(default)]
    pub screening_threshold: Option<f64>,
    /// Seeds item assignment and slider shuffling. Session ids and the token
    /// key always come from the OS generator.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_secret_env() -> String {
    DEFAULT_ADMIN_SECRET_ENV.into()
}

impl StudyConfig {
    pub fn new(manifest: impl Into<PathBuf>, data_dir: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            bind: default_bind(),
            admin_secret_env: default_secret_env(),
            data_dir: data_dir.into(),
            static_dir: None,
            trials_per_session: None,
            midi_min: None,
            midi_max: None,
            screening_threshold: None,
            seed: None,
        }
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: StudyConfig =
            toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        resolve(&mut cfg.manifest);
        resolve(&mut cfg.data_dir);
        if let Some(s) = cfg.static_dir.as_mut() {
            resolve(s);
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Reads the admin secret from the configured environment variable.
    pub fn admin_secret(&self) -> Result<String> {
        match std::env::var(&self.admin_secret_env) {
            Ok(s) if !s.is_empty() => Ok(s),
            _ => Err(Error::InvalidParameter(format!(
                "admin secret environment variable {} is not set",
                self.admin_secret_env
            ))),
        }
    }
}
