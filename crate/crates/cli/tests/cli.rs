use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sse-tda")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn uniform_series_embeds_as_its_delay_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("sine.csv");
    ok(&["simulate", "--kind", "sine", "--n", "120", "--period", "12.5", "--output", s(&series)]);
    let out = ok(&["embed", "--input", s(&series), "--M", "4", "--tau", "2", "--output", s(&dir.path().join("e.csv"))]);
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["identical_to_tde"], true);
    assert_eq!(summary["rows"], 120 - 4 * 2);
}

#[test]
fn two_loop_signal_with_gaps_shows_two_loops() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("loops.csv");
    ok(&[
        "simulate", "--kind", "two-loop", "--n", "1000", "--seed", "7", "--missing-p", "0.2", "--output", s(&series),
    ]);
    let sidecar = read_json(&series.with_extension("json"));
    assert!(sidecar["observations"].as_u64().unwrap() < 1000);

    let out_dir = dir.path().join("run");
    ok(&["pipeline", "--input", s(&series), "--M", "3", "--output-dir", s(&out_dir)]);
    for f in ["subsequences.json", "embedding.csv", "diagram.json", "diagram.csv", "score.json", "pca.csv"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["identical_to_tde"], false);

    let dgm = sse_tda::DiagramF64::from_json(&fs::read_to_string(out_dir.join("diagram.json")).unwrap()).unwrap();
    let mut pers: Vec<f64> = dgm.finite_pairs(1).iter().map(|(b, d)| d - b).collect();
    pers.sort_by(|a, b| b.total_cmp(a));
    assert!(pers.len() >= 2);
    let noise = pers.get(2).copied().unwrap_or(0.0);
    assert!(pers[1] > 3.0 * noise, "H1 persistences {:?}", &pers[..pers.len().min(5)]);
}

#[test]
fn missing_input_exits_with_input_code() {
    let out = run(&["embed", "--input", "/nonexistent/series.csv", "--output", "/tmp/never.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_flags_exit_with_usage_code() {
    assert_eq!(run(&["embed", "--bogus"]).status.code(), Some(2));
}

#[test]
fn help_documents_exit_codes() {
    let text = String::from_utf8(ok(&["--help"]).stdout).unwrap();
    for code in ["0  success", "3  input error", "4  numerical failure", "5  invariant violation"] {
        assert!(text.contains(code), "missing `{code}`");
    }
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    fs::write(
        &config,
        r#"{"experiment": "convergence", "replications": 3, "seed": 11,
            "grid": {"n": [120], "missingness": [0.3, 0.0], "m": [2]}}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["experiment", "--config", s(&config), "--output-dir", s(&a)]);
    ok(&["experiment", "--config", s(&config), "--output-dir", s(&b)]);
    let csv = |d: &Path| fs::read(d.join("convergence.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert!(!csv(&a).is_empty());
}

#[test]
fn persist_and_bottleneck_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("x.csv");
    ok(&["simulate", "--kind", "sine", "--n", "80", "--period", "9.3", "--output", s(&series)]);
    let emb = dir.path().join("e.csv");
    ok(&["embed", "--input", s(&series), "--M", "2", "--output", s(&emb)]);
    let pd = dir.path().join("pd");
    ok(&["persist", "--input", s(&emb), "--output-dir", s(&pd)]);
    let out = ok(&["bottleneck", s(&pd.join("diagram.json")), s(&pd.join("diagram.csv"))]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for d in v["bottleneck"].as_object().unwrap().values() {
        assert_eq!(d.as_f64().unwrap(), 0.0);
    }
}

#[test]
fn denoise_keeps_original_times() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("x.csv");
    ok(&[
        "simulate", "--kind", "sine", "--n", "100", "--period", "10", "--missing-p", "0.2", "--noise-sigma", "0.1",
        "--output", s(&series),
    ]);
    let clean = dir.path().join("clean.csv");
    ok(&["denoise", "--input", s(&series), "--keep-frac", "0.9", "--precision", "double-double", "--output", s(&clean)]);
    let times = |p: &Path| {
        fs::read_to_string(p).unwrap().lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect::<Vec<_>>()
    };
    assert_eq!(times(&series), times(&clean));
}
