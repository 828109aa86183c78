//! Subcommands behind the `naseval` binary.
//!
//! Embedding inputs for `metrics` are looked up by convention:
//!
//! ```text
//! <embeddings>/vggish/<name>.{aemb,csv}       FAD
//! <embeddings>/pitch/<name>.{aemb,csv}        pitch KID
//! <embeddings>/instrument/<name>.{aemb,csv}   instrument KID
//! <embeddings>/ndb/<name>.{aemb,csv}          NDB/k (raw waveforms otherwise)
//! <probabilities>/pitch/<name>.{aemb,csv}     pitch inception score
//! <probabilities>/instrument/<name>.{aemb,csv}
//! ```
//!
//! where `<name>` is `reference` or a system name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::audio::{make_anchor, read_wav, stft, write_wav16, AudioClip, StftParams, Window};
use crate::data_io::{load_embeddings, load_manifest, load_probabilities, StudyManifest};
use crate::error::{Error, Result};
use crate::metrics::report::{
    FAD, INSTRUMENT_IS, INSTRUMENT_KID, MAE, MSE, MULTI_SCALE, NDB_RATIO, PITCH_IS, PITCH_KID,
};
use crate::metrics::{
    fad, fit_ndb, inception_score, kid, kid_blocked, mse_mae, multi_scale_distance, ndb,
    ndb_score, EmbeddingSet, KidBlocks, MetricReport, NdbModel, DEFAULT_FFT_SIZES,
};
use crate::stats::{analyze, write_plot_data, AgreementUnit, AnalysisOptions, Pairing, RatingsTable, ANCHOR, REFERENCE};
use crate::study::{serve, StudyConfig};

/// Seed used whenever `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_221_107;

#[derive(Debug, Parser)]
#[command(name = "naseval", version, about = "Objective metrics, listening study and rating analysis for neural audio synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute objective metrics for every system in a manifest.
    Metrics(MetricsArgs),
    /// Render one anchor WAV per manifest item.
    Anchor(AnchorArgs),
    /// Run the listening-study HTTP service.
    Serve(ServeArgs),
    /// Screen raters and analyze a study export.
    Analyze(AnalyzeArgs),
    /// Fit an NDB/k model and write it as JSON.
    NdbTrain(NdbTrainArgs),
}

#[derive(Debug, clap::Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory of embedding files (see module docs for the layout).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Directory of class-probability files.
    #[arg(long)]
    pub probabilities: Option<PathBuf>,
    /// Pre-fitted NDB model (JSON from `ndb-train`).
    #[arg(long)]
    pub ndb_model: Option<PathBuf>,
    #[arg(long, default_value_t = ndb::DEFAULT_K)]
    pub ndb_k: usize,
    #[arg(long, default_value_t = ndb::DEFAULT_ALPHA)]
    pub ndb_alpha: f64,
    /// FFT sizes of the multi-scale distance.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FFT_SIZES)]
    pub fft_sizes: Vec<usize>,
    /// FFT size of the single-scale spectrogram behind MSE/MAE.
    #[arg(long, default_value_t = 1024)]
    pub stft_fft: usize,
    #[arg(long, default_value_t = 256)]
    pub stft_hop: usize,
    /// KID block size; whole-set KID when omitted.
    #[arg(long)]
    pub kid_block_size: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub kid_repetitions: usize,
    /// Also score the anchor as a system.
    #[arg(long)]
    pub with_anchor: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct AnchorArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    /// TOML service configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured bind address.
    #[arg(long)]
    pub bind: Option<String>,
    /// Overrides the configured seed for assignment and shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PairingArg {
    PerResponse,
    PerRaterMean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AgreementArg {
    Condition,
    Stimulus,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Study export, CSV or JSON.
    #[arg(long)]
    pub export: PathBuf,
    /// Metric report from `metrics`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long, default_value_t = crate::stats::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "per-response")]
    pub pairing: PairingArg,
    #[arg(long)]
    pub bonferroni: bool,
    #[arg(long, value_enum, default_value = "condition")]
    pub agreement_unit: AgreementArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-condition rating distribution CSV.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct NdbTrainArgs {
    /// Training matrix (AEMB or CSV).
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pub train: Option<PathBuf>,
    /// Use the manifest's reference waveforms as training rows.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = ndb::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = ndb::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args`, runs the command and maps the outcome to an exit code:
/// 0 success, 1 usage error, 2 data error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Metrics(a) => cmd_metrics(&a).map(|_| ()),
        Command::Anchor(a) => cmd_anchor(&a.manifest, &a.out_dir).map(|_| ()),
        Command::Serve(a) => cmd_serve(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::NdbTrain(a) => cmd_ndb_train(&a),
    }
}

fn write_output(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::file(path, e))
}

fn read_item(id: &str, path: &Path) -> Result<AudioClip> {
    read_wav(path).map_err(|e| Error::Manifest(format!("item {id:?}: {e}")))
}

fn find_matrix(dir: &Path, name: &str) -> Option<PathBuf> {
    ["aemb", "csv"]
        .iter()
        .map(|ext| dir.join(format!("{name}.{ext}")))
        .find(|p| p.is_file())
}

struct Clips {
    reference: Vec<AudioClip>,
    systems: BTreeMap<String, Vec<AudioClip>>,
}

fn load_clips(manifest: &StudyManifest, with_anchor: bool) -> Result<Clips> {
    let reference: Vec<AudioClip> = manifest
        .items
        .par_iter()
        .map(|item| read_item(&item.id, &item.reference))
        .collect::<Result<_>>()?;
    let mut systems = BTreeMap::new();
    for name in manifest.condition_names() {
        let clips = manifest
            .items
            .par_iter()
            .map(|item| read_item(&item.id, &item.conditions[&name]))
            .collect::<Result<Vec<_>>>()?;
        systems.insert(name, clips);
    }
    if with_anchor {
        let anchors = reference.par_iter().map(make_anchor).collect::<Result<Vec<_>>>()?;
        systems.insert(ANCHOR.to_owned(), anchors);
    }
    Ok(Clips { reference, systems })
}

/// Clips as rows of a matrix, truncated to the shortest clip.
fn waveform_rows(clips: &[AudioClip], len: usize, label: &str) -> Result<EmbeddingSet> {
    let data: Vec<f64> = clips.iter().flat_map(|c| c.samples()[..len].iter().copied()).collect();
    EmbeddingSet::new(data, clips.len(), len, label)
}

type ItemMetrics = BTreeMap<String, BTreeMap<String, f64>>;

fn reconstruction(
    reference: &[AudioClip],
    generated: &[AudioClip],
    ids: &[&str],
    params: StftParams,
    fft_sizes: &[usize],
) -> Result<ItemMetrics> {
    reference
        .par_iter()
        .zip(generated)
        .zip(ids)
        .map(|((r, g), id)| {
            if r.sample_rate() != g.sample_rate() {
                return Err(Error::Manifest(format!(
                    "item {id:?}: sample rates differ ({} vs {})",
                    r.sample_rate(),
                    g.sample_rate()
                )));
            }
            let len = r.len().min(g.len());
            let (r, g) = (r.truncated(len), g.truncated(len));
            let err = mse_mae(&stft(&r, params)?, &stft(&g, params)?)?;
            let msd = multi_scale_distance(&r, &g, fft_sizes)?;
            let m = BTreeMap::from([
                (MSE.to_owned(), err.mse),
                (MAE.to_owned(), err.mae),
                (MULTI_SCALE.to_owned(), msd),
            ]);
            Ok(((*id).to_owned(), m))
        })
        .collect()
}

/// Computes every metric whose inputs exist. Errors only when nothing at all
/// could be computed.
pub fn cmd_metrics(args: &MetricsArgs) -> Result<MetricReport> {
    let manifest = load_manifest(&args.manifest)?;
    if manifest.items.is_empty() {
        return Err(Error::Manifest("manifest has no items".into()));
    }
    let params = StftParams::new(args.stft_fft, args.stft_hop, Window::Hann)?;
    if args.fft_sizes.is_empty() {
        return Err(Error::InvalidParameter("empty FFT size list".into()));
    }
    for &size in &args.fft_sizes {
        StftParams::new(size, (size / 4).max(1), Window::Hann)?;
    }
    let clips = load_clips(&manifest, args.with_anchor)?;
    let ids: Vec<&str> = manifest.items.iter().map(|i| i.id.as_str()).collect();

    let mut report = MetricReport {
        params: json!({
            "stft": { "fft_size": args.stft_fft, "hop_size": args.stft_hop, "window": "hann" },
            "multi_scale_fft_sizes": args.fft_sizes,
            "ndb": { "k": args.ndb_k, "alpha": args.ndb_alpha },
            "kid": match args.kid_block_size {
                Some(b) => json!({ "block_size": b, "repetitions": args.kid_repetitions }),
                None => json!("whole_set"),
            },
            "seed": args.seed,
        }),
        ..MetricReport::default()
    };

    // NDB: explicit model, else fit on reference embeddings, else on raw reference waveforms
    let ndb_dir = args.embeddings.as_ref().map(|d| d.join("ndb"));
    let shortest = clips
        .reference
        .iter()
        .chain(clips.systems.values().flatten())
        .map(AudioClip::len)
        .min()
        .unwrap_or(0);
    let ndb_model: std::result::Result<NdbModel, String> = (|| {
        if let Some(path) = &args.ndb_model {
            let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e).to_string())?;
            let model: NdbModel = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            model.validate().map_err(|e| e.to_string())?;
            return Ok(model);
        }
        let train = match ndb_dir.as_deref().and_then(|d| find_matrix(d, REFERENCE)) {
            Some(path) => load_embeddings(path, REFERENCE).map_err(|e| e.to_string())?,
            None => waveform_rows(&clips.reference, shortest, REFERENCE).map_err(|e| e.to_string())?,
        };
        fit_ndb(&train, args.ndb_k, args.ndb_alpha, args.seed).map_err(|e| e.to_string())
    })();

    let results: Vec<(String, Result<ItemMetrics>, Vec<(&str, std::result::Result<f64, String>)>)> = clips
        .systems
        .par_iter()
        .map(|(system, generated)| {
            let items = reconstruction(&clips.reference, generated, &ids, params, &args.fft_sizes);
            let mut metrics = Vec::new();

            let ndb = match &ndb_model {
                Ok(model) => {
                    let test = match ndb_dir.as_deref().and_then(|d| find_matrix(d, system)) {
                        Some(path) => load_embeddings(path, system.as_str()),
                        None if model.dim() == shortest => waveform_rows(generated, shortest, system),
                        None => Err(Error::InvalidParameter(format!("no NDB embeddings for {system}"))),
                    };
                    test.and_then(|t| ndb_score(model, &t)).map(|s| s.ratio).map_err(|e| e.to_string())
                }
                Err(e) => Err(format!("NDB model unavailable: {e}")),
            };
            metrics.push((NDB_RATIO, ndb));

            let embedded = |kind: &str| -> std::result::Result<(EmbeddingSet, EmbeddingSet), String> {
                let dir = args
                    .embeddings
                    .as_ref()
                    .ok_or("no embeddings directory given")?
                    .join(kind);
                let load = |name: &str| {
                    let path = find_matrix(&dir, name)
                        .ok_or_else(|| format!("missing {kind} embeddings for {name}"))?;
                    load_embeddings(path, name).map_err(|e| e.to_string())
                };
                Ok((load(REFERENCE)?, load(system)?))
            };
            let kid_of = |(r, g): (EmbeddingSet, EmbeddingSet)| match args.kid_block_size {
                Some(block_size) => kid_blocked(
                    &r,
                    &g,
                    &KidBlocks {
                        block_size,
                        repetitions: args.kid_repetitions,
                        seed: args.seed,
                    },
                )
                .map(|k| k.mean),
                None => kid(&r, &g),
            };
            metrics.push((FAD, embedded("vggish").and_then(|(r, g)| fad(&r, &g).map_err(|e| e.to_string()))));
            metrics.push((PITCH_KID, embedded("pitch").and_then(|p| kid_of(p).map_err(|e| e.to_string()))));
            metrics.push((
                INSTRUMENT_KID,
                embedded("instrument").and_then(|p| kid_of(p).map_err(|e| e.to_string())),
            ));

            let score = |kind: &str| -> std::result::Result<f64, String> {
                let dir = args
                    .probabilities
                    .as_ref()
                    .ok_or("no probabilities directory given")?
                    .join(kind);
                let path = find_matrix(&dir, system)
                    .ok_or_else(|| format!("missing {kind} probabilities for {system}"))?;
                Ok(inception_score(&load_probabilities(path).map_err(|e| e.to_string())?))
            };
            metrics.push((PITCH_IS, score("pitch")));
            metrics.push((INSTRUMENT_IS, score("instrument")));
            (system.clone(), items, metrics)
        })
        .collect();

    for (system, items, metrics) in results {
        match items {
            Ok(items) => {
                for metric in [MSE, MAE, MULTI_SCALE] {
                    let values: Vec<f64> = items.values().map(|m| m[metric]).collect();
                    report.set(&system, metric, values.iter().sum::<f64>() / values.len() as f64)?;
                }
                report.per_item.insert(system.clone(), items);
            }
            Err(e) => {
                for metric in [MSE, MAE, MULTI_SCALE] {
                    report.skip(&system, metric, e.to_string());
                }
            }
        }
        for (metric, value) in metrics {
            match value {
                Ok(v) => report.set(&system, metric, v)?,
                Err(reason) => report.skip(&system, metric, reason),
            }
        }
    }

    if report.computed_count() == 0 {
        return Err(Error::InsufficientData("no metric could be computed".into()));
    }
    write_output(&args.out, report.to_json()?.as_bytes())?;
    Ok(report)
}

fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

/// Writes `<out_dir>/<item id>.wav` for every item; returns the paths.
pub fn cmd_anchor(manifest: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = load_manifest(manifest)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e))?;
    manifest
        .items
        .par_iter()
        .map(|item| {
            let anchor = make_anchor(&read_item(&item.id, &item.reference)?)?;
            let path = out_dir.join(format!("{}.wav", file_stem_for(&item.id)));
            write_wav16(&path, &anchor)?;
            Ok(path)
        })
        .collect()
}

fn cmd_serve(args: &ServeArgs) -> Result<()> {
    let mut config = StudyConfig::load(&args.config)?;
    if let Some(bind) = &args.bind {
        config.bind = bind.clone();
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(&config))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let table = RatingsTable::load_export(&args.export)?;
    let metrics = args.metrics.as_ref().map(MetricReport::load).transpose()?;
    let options = AnalysisOptions {
        threshold: args.threshold,
        pairing: match args.pairing {
            PairingArg::PerResponse => Pairing::PerResponse,
            PairingArg::PerRaterMean => Pairing::PerRaterMean,
        },
        bonferroni: args.bonferroni,
        agreement_unit: match args.agreement_unit {
            AgreementArg::Condition => AgreementUnit::Condition,
            AgreementArg::Stimulus => AgreementUnit::Stimulus,
        },
    };
    if !(0.0..=100.0).contains(&options.threshold) {
        return Err(Error::InvalidParameter(format!("threshold {} outside [0, 100]", options.threshold)));
    }
    let report = analyze(&table, metrics.as_ref(), &options)?;
    write_output(&args.out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    if let Some(path) = &args.plot_data {
        let mut buf = Vec::new();
        write_plot_data(&report, &mut buf)?;
        write_output(path, &buf)?;
    }
    Ok(())
}

fn cmd_ndb_train(args: &NdbTrainArgs) -> Result<()> {
    let train = match (&args.train, &args.manifest) {
        (Some(path), _) => load_embeddings(path, "train")?,
        (None, Some(manifest)) => {
            let manifest = load_manifest(manifest)?;
            let clips = manifest
                .items
                .iter()
                .map(|item| read_item(&item.id, &item.reference))
                .collect::<Result<Vec<_>>>()?;
            let len = clips.iter().map(AudioClip::len).min().unwrap_or(0);
            waveform_rows(&clips, len, REFERENCE)?
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let model = fit_ndb(&train, args.k, args.alpha, args.seed)?;
    write_output(&args.out, serde_json::to_string_pretty(&model)?.as_bytes())
}
