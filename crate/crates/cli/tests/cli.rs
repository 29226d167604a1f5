use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectral-xai"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small generator settings so the end-to-end tests stay fast.
const SMALL_SYNTH: &str = r#"{
    "m_features": 240,
    "axis_range": [400.0, 1200.0],
    "peaks": [
        {"center": 500.0, "width": 10.0, "amplitude": 1.0},
        {"center": 700.0, "width": 12.0, "amplitude": 1.2},
        {"center": 900.0, "width": 9.0, "amplitude": 0.8},
        {"center": 1100.0, "width": 14.0, "amplitude": 1.1}
    ],
    "active_peaks": [1, 3],
    "response_weights": [8.0, -5.0],
    "interactions": [],
    "n_old": 60,
    "n_new": 40
}"#;

fn small_data(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("synth.json");
    std::fs::write(&cfg, SMALL_SYNTH).unwrap();
    let out = dir.join("data");
    let o = run(&["synth", "--config", p(&cfg), "--out", p(&out), "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn synth_writes_batches_and_truth() {
    let dir = TempDir::new().unwrap();
    let data = small_data(dir.path());
    for f in ["old.csv", "new.csv", "expert.txt", "truth.json"] {
        assert!(data.join(f).exists(), "{f} missing");
    }
    let old = std::fs::read_to_string(data.join("old.csv")).unwrap();
    assert_eq!(old.lines().count(), 61);
    let expert = std::fs::read_to_string(data.join("expert.txt")).unwrap();
    let locations: Vec<f64> = expert
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.parse().unwrap())
        .collect();
    assert!(locations
        .iter()
        .all(|w| (688.0..=712.0).contains(w) || (1086.0..=1114.0).contains(w)));
}

#[test]
fn select_fit_explain_pipeline() {
    let dir = TempDir::new().unwrap();
    let data = small_data(dir.path());
    let old = data.join("old.csv");
    let subset = dir.path().join("subset.txt");
    let ranking = dir.path().join("ranking.csv");
    let o = run(&[
        "select",
        "--data",
        p(&old),
        "--method",
        "ridge",
        "--k",
        "20",
        "--out",
        p(&subset),
        "--ranking",
        p(&ranking),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let chosen = std::fs::read_to_string(&subset).unwrap();
    assert_eq!(chosen.lines().filter(|l| !l.starts_with('#')).count(), 20);
    assert_eq!(std::fs::read_to_string(&ranking).unwrap().lines().count(), 241);

    let model = dir.path().join("model.json");
    let o = run(&[
        "fit",
        "--data",
        p(&old),
        "--model",
        "LR",
        "--subset",
        p(&subset),
        "--out",
        p(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    for method in ["shap", "lime", "surrogate"] {
        let out = dir.path().join(method);
        let o = run(&[
            "explain",
            "--model",
            p(&model),
            "--data",
            p(&data.join("new.csv")),
            "--method",
            method,
            "--out",
            p(&out),
        ]);
        assert_eq!(code(&o), 0, "{method}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("ranking.csv").exists());
        assert_eq!(out.join("attributions.csv").exists(), method != "surrogate");
        assert_eq!(out.join("surrogate.json").exists(), method == "surrogate");
    }
}

#[test]
fn evaluate_then_report() {
    let dir = TempDir::new().unwrap();
    let data = small_data(dir.path());
    let cfg = dir.path().join("experiment.json");
    let text = format!(
        r#"{{
            "data": {{"kind": "files", "old": "{}", "new": "{}", "expert": "{}"}},
            "n_repeats": 2,
            "models": [{{"name": "LR", "model": {{"type": "linear", "alpha": 0.001}}}}],
            "methods": ["FullModel", "Expert", "Ridge"],
            "subset_rule": {{"count": 20}},
            "curve_ks": [10, 20],
            "tradeoff_k": 20,
            "tradeoff": {{"model": "LR", "scenario": "Realtime"}}
        }}"#,
        p(&data.join("old.csv")),
        p(&data.join("new.csv")),
        p(&data.join("expert.txt"))
    );
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("report");
    let o = run(&[
        "--threads",
        "2",
        "evaluate",
        "--config",
        p(&cfg),
        "--out",
        p(&out),
        "--seed",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "table.csv", "correctness_curve.csv", "tradeoff.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let o = run(&["report", "--in", p(&out), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table
        .lines()
        .next()
        .unwrap()
        .starts_with("model,method,Control_train_mse_mean"));

    let o = run(&["report", "--in", p(&out), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["base_seed"], 3);
    assert_eq!(v["cells"].as_array().unwrap().len(), 9);
}

#[test]
fn failed_cells_exit_with_partial_code() {
    let dir = TempDir::new().unwrap();
    let data = small_data(dir.path());
    let cfg = dir.path().join("experiment.json");
    // No expert file: the Expert cells fail while the others succeed.
    let text = format!(
        r#"{{
            "data": {{"kind": "files", "old": "{}", "new": "{}"}},
            "n_repeats": 1,
            "scenarios": ["Control"],
            "models": [{{"name": "LR", "model": {{"type": "linear", "alpha": 0.001}}}}],
            "methods": ["FullModel", "Expert"]
        }}"#,
        p(&data.join("old.csv")),
        p(&data.join("new.csv"))
    );
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("report");
    let o = run(&["evaluate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("report.json").exists());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n_repeats": 0}"#).unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&run(&["evaluate", "--config", p(&bad), "--out", p(&out)])), 1);

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&run(&["evaluate", "--config", p(&bad), "--out", p(&out)])), 1);

    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(
        code(&run(&[
            "select", "--data", "x.csv", "--method", "nonsense", "--k", "3", "--out", "y"
        ])),
        1
    );

    let missing = dir.path().join("missing.csv");
    let o = run(&[
        "select",
        "--data",
        p(&missing),
        "--method",
        "rf",
        "--k",
        "3",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);

    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "100,200,cn\n1,2\n").unwrap();
    let o = run(&[
        "select",
        "--data",
        p(&garbage),
        "--method",
        "rf",
        "--k",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);

    assert_eq!(code(&run(&["--help"])), 0);
}
