#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use naseval::audio::{write_wav16, AudioClip};
use serde_json::json;

pub const RATE: u32 = 16_000;

pub fn sine(freq: f64, amp: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| amp * (2.0 * PI * freq * n as f64 / f64::from(RATE)).sin())
        .collect()
}

pub fn midi_hz(note: i32) -> f64 {
    440.0 * 2f64.powf(f64::from(note - 69) / 12.0)
}

/// A decaying three-partial tone, like a plucked note.
pub fn tone(note: i32, len: usize) -> Vec<f64> {
    let f = midi_hz(note);
    (0..len)
        .map(|n| {
            let t = n as f64 / f64::from(RATE);
            let env = (-3.0 * t).exp();
            env * (0.5 * (2.0 * PI * f * t).sin()
                + 0.25 * (2.0 * PI * 2.0 * f * t).sin()
                + 0.12 * (2.0 * PI * 3.0 * f * t).sin())
        })
        .collect()
}

pub fn clip(samples: Vec<f64>) -> AudioClip {
    AudioClip::new(samples, RATE).unwrap()
}

pub fn write(path: &Path, samples: &[f64]) {
    write_wav16(path, &clip(samples.to_vec())).unwrap();
}

/// Direct O(N²) DFT magnitudes of one frame, bins 0..=N/2.
pub fn dft_magnitudes(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, x) in frame.iter().enumerate() {
                let phase = -2.0 * PI * (k * t) as f64 / n as f64;
                re += x * phase.cos();
                im += x * phase.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// A written corpus: reference tones plus one WAV per (item, system).
pub struct Corpus {
    pub dir: tempfile::TempDir,
    pub manifest: PathBuf,
    pub ids: Vec<String>,
}

impl Corpus {
    /// `systems` maps a system name to a degradation of the reference samples.
    pub fn build(
        notes: &[i32],
        len: usize,
        systems: &[(&str, &dyn Fn(&[f64]) -> Vec<f64>)],
        settings: serde_json::Value,
    ) -> Corpus {
        let dir = tempfile::tempdir().unwrap();
        let mut items = Vec::new();
        let mut ids = Vec::new();
        for (i, &note) in notes.iter().enumerate() {
            let id = format!("keys-{i:03}-{note:03}");
            let reference = tone(note, len);
            write(&dir.path().join(format!("{id}.wav")), &reference);
            let mut conditions = BTreeMap::new();
            for (name, f) in systems {
                let file = format!("{name}/{id}.wav");
                std::fs::create_dir_all(dir.path().join(name)).unwrap();
                write(&dir.path().join(&file), &f(&reference));
                conditions.insert(name.to_string(), file);
            }
            items.push(json!({
                "id": id,
                "midi_note": note,
                "instrument_family": "keyboard",
                "reference": format!("{id}.wav"),
                "conditions": conditions,
            }));
            ids.push(id);
        }
        let manifest = dir.path().join("manifest.json");
        std::fs::write(
            &manifest,
            serde_json::to_string_pretty(&json!({ "items": items, "settings": settings })).unwrap(),
        )
        .unwrap();
        Corpus { dir, manifest, ids }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }
}

/// Deterministic pseudo-noise in [-amp, amp].
pub fn noise(seed: u64, amp: f64, len: usize) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-amp..=amp)).collect()
}

pub fn three_systems() -> Vec<(&'static str, Box<dyn Fn(&[f64]) -> Vec<f64>>)> {
    vec![
        ("ddsp", Box::new(|x: &[f64]| x.iter().map(|s| s * 0.9).collect())),
        ("diffwave", Box::new(|x: &[f64]| {
            x.iter().zip(noise(7, 0.02, x.len())).map(|(s, n)| (s + n).clamp(-1.0, 1.0)).collect()
        })),
        ("nsynth", Box::new(|x: &[f64]| {
            naseval::audio::quantize(x, 6).unwrap()
        })),
    ]
}

impl Corpus {
    pub fn with_three_systems(notes: &[i32], len: usize, settings: serde_json::Value) -> Corpus {
        let systems = three_systems();
        let refs: Vec<(&str, &dyn Fn(&[f64]) -> Vec<f64>)> =
            systems.iter().map(|(n, f)| (*n, f.as_ref())).collect();
        Corpus::build(notes, len, &refs, settings)
    }
}
