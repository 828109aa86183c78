mod common;

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use common::Corpus;
use naseval::data_io::{write_embedding_file, EmbeddingFile, MatrixKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_naseval");
const SECRET_ENV: &str = "NASEVAL_ADMIN_SECRET";

fn naseval(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove(SECRET_ENV).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn two_system_corpus(items: usize) -> Corpus {
    let ddsp = |x: &[f64]| x.iter().map(|s| s * 0.8).collect::<Vec<_>>();
    let nsynth = |x: &[f64]| naseval::audio::quantize(x, 5).unwrap();
    let notes: Vec<i32> = (0..items as i32).map(|i| 40 + i).collect();
    Corpus::build(&notes, 2048, &[("ddsp", &ddsp), ("nsynth", &nsynth)], json!({}))
}

fn write_matrix(path: PathBuf, kind: MatrixKind, rows: usize, cols: usize, rng: &mut ChaCha8Rng) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    let mut data: Vec<f32> = (0..rows * cols).map(|_| rng.random_range(0.05f32..1.0)).collect();
    if kind == MatrixKind::Probability {
        for row in data.chunks_mut(cols) {
            let s: f32 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    write_embedding_file(&path, &EmbeddingFile::new(kind, rows, cols, data).unwrap()).unwrap();
}

/// Embedding and probability trees for `reference` plus each system.
fn feature_dirs(root: &Path, systems: &[&str], rows: usize) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let (emb, prob) = (root.join("emb"), root.join("prob"));
    for name in std::iter::once(&"reference").chain(systems) {
        write_matrix(emb.join(format!("vggish/{name}.aemb")), MatrixKind::Embedding, rows, 8, &mut rng);
        write_matrix(emb.join(format!("pitch/{name}.aemb")), MatrixKind::Embedding, rows, 6, &mut rng);
        write_matrix(emb.join(format!("instrument/{name}.aemb")), MatrixKind::Embedding, rows, 6, &mut rng);
        write_matrix(prob.join(format!("pitch/{name}.aemb")), MatrixKind::Probability, rows, 5, &mut rng);
        write_matrix(prob.join(format!("instrument/{name}.aemb")), MatrixKind::Probability, rows, 4, &mut rng);
    }
    (emb, prob)
}

#[test]
fn metrics_with_full_inputs() {
    let corpus = two_system_corpus(12);
    let (emb, prob) = feature_dirs(corpus.path(), &["ddsp", "nsynth"], 12);
    let out = corpus.path().join("out/report.json");
    let run = |out: &Path| {
        naseval(&[
            "metrics", "--manifest", arg(&corpus.manifest), "--embeddings", arg(&emb),
            "--probabilities", arg(&prob), "--ndb-k", "3", "--fft-sizes", "512,128", "--out", arg(out),
        ])
    };
    let o = run(&out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for system in ["ddsp", "nsynth"] {
        let metrics = report["systems"][system].as_object().unwrap();
        assert_eq!(metrics.len(), naseval::metrics::report::ALL_METRICS.len());
        for (name, value) in metrics {
            assert!(value.is_number(), "{system}/{name} is {value}");
        }
        assert_eq!(report["per_item"][system].as_object().unwrap().len(), 12);
    }
    assert_eq!(report["params"]["multi_scale_fft_sizes"], json!([512, 128]));

    let again = corpus.path().join("out/again.json");
    assert!(run(&again).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn metrics_skip_missing_inputs() {
    let corpus = two_system_corpus(6);
    let (emb, _) = feature_dirs(corpus.path(), &["ddsp"], 6);
    let out = corpus.path().join("r.json");
    let o = naseval(&[
        "metrics", "--manifest", arg(&corpus.manifest), "--embeddings", arg(&emb), "--ndb-k", "2", "--out", arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for system in ["ddsp", "nsynth"] {
        for m in ["pitch_inception_score", "instrument_inception_score"] {
            assert!(report["systems"][system][m].is_null());
            assert!(report["skipped"][system][m].as_str().unwrap().contains("probabilities"));
        }
        for m in ["mse", "mae", "multi_scale_distance", "ndb_ratio"] {
            assert!(report["systems"][system][m].is_number(), "{system}/{m}");
        }
    }
    assert!(report["systems"]["ddsp"]["fad"].is_number());
    assert!(report["systems"]["nsynth"]["fad"].is_null());
}

#[test]
fn metrics_rejects_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.json");
    std::fs::write(&manifest, r#"{"items": []}"#).unwrap();
    let o = naseval(&["metrics", "--manifest", arg(&manifest), "--out", arg(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn anchor_files_are_deterministic() {
    let corpus = two_system_corpus(3);
    let (a, b) = (corpus.path().join("a1"), corpus.path().join("a2"));
    for out in [&a, &b] {
        let o = naseval(&["anchor", "--manifest", arg(&corpus.manifest), "--out-dir", arg(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for (name, id) in names.iter().zip(&corpus.ids) {
        assert_eq!(name.to_str().unwrap(), format!("{id}.wav"));
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    }

    std::fs::remove_file(corpus.path().join(format!("{}.wav", corpus.ids[1]))).unwrap();
    let o = naseval(&["anchor", "--manifest", arg(&corpus.manifest), "--out-dir", arg(&a)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&corpus.ids[1]));
}

const HEADER: &str = "session,age_bracket,production_familiarity,synthesis_knowledge,equipment_spend,session_complete,trial,item,condition,score";

#[test]
fn analyze_reports_parse_line() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("e.csv");
    let good = "s1,25-50,very,none,under_250,true,0,i0,reference,90";
    std::fs::write(&export, format!("{HEADER}\n{good}\n{good}x\ns1,25-50,very,none,under_250,true,0,i0,anchor,abc\n")).unwrap();
    let o = naseval(&["analyze", "--export", arg(&export), "--out", arg(&dir.path().join("a.json"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn analyze_flags_zero_kept_raters() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("e.csv");
    let mut text = format!("{HEADER}\n");
    for s in ["s1", "s2"] {
        for c in ["reference", "anchor", "x", "y", "z"] {
            text.push_str(&format!("{s},25-50,very,none,under_250,false,0,i0,{c},70\n"));
        }
    }
    std::fs::write(&export, text).unwrap();
    let out = dir.path().join("a.json");
    let plot = dir.path().join("plot.csv");
    let o = naseval(&["analyze", "--export", arg(&export), "--out", arg(&out), "--plot-data", arg(&plot)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["screening"]["kept"], json!([]));
    assert_eq!(report["screening"]["removed"].as_array().unwrap().len(), 2);
    assert!(report["notes"].to_string().contains("zero raters kept"));
    assert_eq!(std::fs::read_to_string(&plot).unwrap().trim(), "condition,rater,mean_score");
}

#[test]
fn help_lists_flags_and_unknown_flags_fail() {
    let o = naseval(&["metrics", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = String::from_utf8_lossy(&o.stdout);
    for flag in [
        "--manifest", "--embeddings", "--probabilities", "--ndb-model", "--ndb-k", "--ndb-alpha", "--fft-sizes",
        "--stft-fft", "--stft-hop", "--kid-block-size", "--kid-repetitions", "--with-anchor", "--seed", "--out",
    ] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
    for sub in ["metrics", "anchor", "serve", "analyze", "ndb-train"] {
        assert!(String::from_utf8_lossy(&naseval(&["--help"]).stdout).contains(sub));
    }
    assert_eq!(naseval(&["analyze", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(naseval(&["nope"]).status.code(), Some(1));
}

#[test]
fn ndb_train_writes_model() {
    let corpus = two_system_corpus(6);
    let out = corpus.path().join("ndb.json");
    let o = naseval(&["ndb-train", "--manifest", arg(&corpus.manifest), "--k", "2", "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let model: naseval::metrics::NdbModel = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(model.k, 2);
    assert_eq!(model.train_count, 6);

    let report = corpus.path().join("r.json");
    let o = naseval(&["metrics", "--manifest", arg(&corpus.manifest), "--ndb-model", arg(&out), "--out", arg(&report)]);
    assert!(o.status.success());
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn serve_config(corpus: &Corpus, bind: &str) -> PathBuf {
    let path = corpus.path().join("study.toml");
    let text = format!(
        "manifest = {:?}\ndata_dir = {:?}\nbind = {bind:?}\ntrials_per_session = 2\n",
        arg(&corpus.manifest),
        arg(&corpus.path().join("data")),
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn spawn_serve(config: &Path, secret: Option<&str>) -> Child {
    let mut cmd = Command::new(BIN);
    cmd.args(["serve", "--config", arg(config)]).env_remove(SECRET_ENV).stdout(Stdio::null()).stderr(Stdio::piped());
    if let Some(s) = secret {
        cmd.env(SECRET_ENV, s);
    }
    cmd.spawn().unwrap()
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn http_get(addr: &str, path: &str) -> Option<String> {
    let mut stream = TcpStream::connect(addr).ok()?;
    write!(stream, "GET {path} HTTP/1.0\r\nHost: {addr}\r\n\r\n").ok()?;
    let mut out = String::new();
    stream.read_to_string(&mut out).ok()?;
    Some(out)
}

#[test]
fn serve_answers_health_probe() {
    let corpus = Corpus::with_three_systems(&[40, 41, 42], 600, json!({}));
    let addr = format!("127.0.0.1:{}", free_port());
    let config = serve_config(&corpus, &addr);
    let _server = Server(spawn_serve(&config, Some("s3cret")));
    let deadline = Instant::now() + Duration::from_secs(20);
    let reply = loop {
        if let Some(r) = http_get(&addr, "/api/health") {
            break r;
        }
        assert!(Instant::now() < deadline, "server never answered");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(reply.starts_with("HTTP/1.0 200") || reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains(r#""status":"ok""#));
}

#[test]
fn serve_refuses_busy_port_and_missing_secret() {
    let corpus = Corpus::with_three_systems(&[40, 41, 42], 600, json!({}));
    let busy = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = busy.local_addr().unwrap().to_string();
    let config = serve_config(&corpus, &addr);

    let o = spawn_serve(&config, Some("s3cret")).wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot bind"));

    let o = spawn_serve(&config, None).wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(SECRET_ENV));
    drop(busy);
}
