use std::path::Path;
use std::process::{Command, Output};

const SCENARIO: &str = r#"
start = "2022-01-03"
days = 40
seed = 3

[model]
countries = ["DE", "FR"]
freq_mismatch = 4
ar_lags = [4]
daily_ar = true
covariates = [
  { name = "wind_fc", frequency = "high" },
  { name = "gas", frequency = "low" },
]

[[processes]]
name = "gas"
ar = 0.95
level = 30.0
scale = 3.0
"#;

const CONFIG: &str = r#"
schema_version = 1

[model]
freq_mismatch = 4
ar_lags = [4]
daily_ar = true
covariates = [
  { name = "wind_fc", frequency = "high" },
  { name = "gas", frequency = "low" },
]

[sampler]
burn_in = 50
retained = 120
"#;

fn prumidas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prumidas"))
        .args(args)
        .env("PRUMIDAS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = prumidas(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn simulated(root: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let scenario = root.join("scenario.toml");
    std::fs::write(&scenario, SCENARIO).unwrap();
    let out = root.join(name);
    ok(&["simulate", "--scenario", s(&scenario), "--out", s(&out), "--seed", seed]);
    out
}

#[test]
fn simulate_is_deterministic_and_digested() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulated(dir.path(), "a", "5");
    let b = simulated(dir.path(), "b", "5");
    let c = simulated(dir.path(), "c", "6");
    let digests = |d: &Path| -> Vec<String> {
        let m = manifest(&d.join("manifest.json"));
        m["outputs"].as_array().unwrap().iter().map(|o| o["sha256"].as_str().unwrap().to_string()).collect()
    };
    assert!(!digests(&a).is_empty());
    assert_eq!(digests(&a), digests(&b));
    assert_ne!(digests(&a), digests(&c));
    for f in ["hourly_DE.csv", "hourly_FR.csv", "daily.csv", "truth.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
}

#[test]
fn full_workflow_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "data", "4");
    let config = dir.path().join("model.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let run = dir.path().join("run");
    ok(&["fit", "--config", s(&config), "--data", s(&data), "--chains", "2", "--seed", "9", "--out", s(&run)]);
    for f in ["config.toml", "manifest.json", "chain_0.csv", "chain_0.json", "chain_1.csv", "chain_1.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let m = manifest(&run.join("manifest.json"));
    assert_eq!(m["command"], "fit");
    assert_eq!(m["seed"], 9);
    assert!(m["config_hash"].as_str().is_some_and(|h| !h.is_empty()));
    assert_ne!(
        std::fs::read(run.join("chain_0.csv")).unwrap(),
        std::fs::read(run.join("chain_1.csv")).unwrap()
    );

    ok(&["summarize", "--run", s(&run)]);
    ok(&["effects", "--run", s(&run), "--covariate", "gas"]);
    ok(&["volatility", "--run", s(&run), "--aggregate", "hourly", "--plug-in", "median"]);
    let diag = dir.path().join("diag");
    ok(&["diagnose", "--run", s(&run), "--out", s(&diag)]);
    for f in [
        "summary.csv",
        "summary.csv.json",
        "summary.manifest.json",
        "effects_gas_boxplot.csv",
        "effects_gas_density.csv",
        "volatility_hourly.csv",
    ] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert!(diag.join("diagnostics_chain0.csv").exists());
    assert!(diag.join("diagnostics_chain1.csv").exists());

    let summary = std::fs::read_to_string(run.join("summary.csv")).unwrap();
    assert!(summary.starts_with("parameter,mean,sd,q05,q50,q95"));
    let side = manifest(&run.join("summary.csv.json"));
    assert_eq!(side["manifest"], "summary.manifest.json");
}

#[test]
fn missing_inputs_exit_with_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = prumidas(&["simulate", "--scenario", s(&dir.path().join("nope.toml")), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = prumidas(&["summarize", "--run", s(&dir.path().join("norun"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_covariate_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "data", "4");
    let config = dir.path().join("model.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let run = dir.path().join("run");
    ok(&["fit", "--config", s(&config), "--data", s(&data), "--retained", "20", "--burn-in", "0", "--out", s(&run)]);
    let out = prumidas(&["effects", "--run", s(&run), "--covariate", "coal"]);
    assert_eq!(out.status.code(), Some(2));
}
