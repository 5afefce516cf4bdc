//! Configuration handling, deterministic file emission and scenario
//! consistency checks.

use std::fs;

use adce::error::AdceError;
use adce::experiments::{resolve, run_scenario, ExperimentConfig, Scenario};

fn run_to_dir(config: &ExperimentConfig, dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let resolved = resolve(config).unwrap();
    let bundle = run_scenario(&resolved, dir).unwrap();
    bundle.files
}

#[test]
fn identical_configs_give_identical_csv_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let config = ExperimentConfig::bare(Scenario::Fig2a);
    run_to_dir(&config, &a);
    run_to_dir(&config, &b);
    let bytes_a = fs::read(a.join("fig2a.csv")).unwrap();
    let bytes_b = fs::read(b.join("fig2a.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b);
    assert!(!bytes_a.is_empty());
}

#[test]
fn unknown_scenario_lists_valid_ones() {
    let err = "fig9".parse::<Scenario>().unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("fig9"));
    assert!(msg.contains("fig3c"));
    assert!(msg.contains("sweep"));
}

#[test]
fn json_config_round_trip_and_defaults() {
    let text = r#"{
        "scenario": "rates",
        "regime": "RR",
        "params": { "g00": 0.05 },
        "nbar": 1.0
    }"#;
    let config = ExperimentConfig::from_json(text).unwrap();
    let resolved = resolve(&config).unwrap();
    assert_eq!(resolved.params.g00, 0.05);
    // defaults follow the scenario rules: G01 = 1.2 G00, delta1 = -8 G00
    assert!((resolved.params.g01 - 0.06).abs() < 1e-15);
    assert!((resolved.params.delta1() + 0.4).abs() < 1e-12);
    assert!((resolved.params.delta2() - 0.4).abs() < 1e-12);
    assert_eq!(resolved.nbar, 1.0);
    // unknown fields are rejected
    assert!(ExperimentConfig::from_json(r#"{"scenario": "rates", "bogus": 1}"#).is_err());
}

#[test]
fn simulate_requires_modulation_and_t_end() {
    let config = ExperimentConfig::bare(Scenario::Simulate);
    match resolve(&config) {
        Err(AdceError::Config(msg)) => assert!(msg.contains("modulation")),
        other => panic!("expected config error, got {other:?}"),
    }
    let text = r#"{
        "scenario": "simulate",
        "modulation": { "e1": { "depth": 0.07, "tones": [{"freq": 1.45, "weight": 1.0, "phase": 0.0}] } }
    }"#;
    let config = ExperimentConfig::from_json(text).unwrap();
    match resolve(&config) {
        Err(AdceError::Config(msg)) => assert!(msg.contains("t_end")),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn sweep_axis_validation() {
    let text = r#"{
        "scenario": "sweep",
        "sweep": { "axes": [
            {"param": "delta1", "values": [-0.48]},
            {"param": "eta", "values": [1.4]},
            {"param": "nbar", "values": [1.0]}
        ] }
    }"#;
    let config = ExperimentConfig::from_json(text).unwrap();
    assert!(matches!(resolve(&config), Err(AdceError::Config(_))));

    let text = r#"{
        "scenario": "sweep",
        "sweep": { "axes": [ {"param": "voltage", "values": [1.0]} ] }
    }"#;
    let config = ExperimentConfig::from_json(text).unwrap();
    assert!(matches!(resolve(&config), Err(AdceError::Config(_))));
}

/// A one-point sweep reproduces the corresponding fig2a row bit-for-bit.
#[test]
fn one_point_sweep_matches_fig2a() {
    let tmp = tempfile::tempdir().unwrap();
    run_to_dir(&ExperimentConfig::bare(Scenario::Fig2a), tmp.path());
    let sweep_cfg = ExperimentConfig::from_json(
        r#"{
            "scenario": "sweep",
            "regime": "RR",
            "sweep": { "axes": [ {"param": "delta1", "values": [-0.48]} ] }
        }"#,
    )
    .unwrap();
    run_to_dir(&sweep_cfg, tmp.path());

    let fig2a = fs::read_to_string(tmp.path().join("fig2a.csv")).unwrap();
    let sweep = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    // locate the x = 8 row of fig2a and the RR (+D,-D) columns
    let header: Vec<&str> = fig2a.lines().next().unwrap().split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "theta_RR(+D;-D)[omega0]")
        .unwrap();
    let row: Vec<&str> = fig2a
        .lines()
        .find(|l| l.starts_with("8,"))
        .unwrap()
        .split(',')
        .collect();
    let fig2a_theta = row[col];

    let sheader: Vec<&str> = sweep.lines().next().unwrap().split(',').collect();
    let scol = sheader
        .iter()
        .position(|h| *h == "theta_abs(+D;-D)[omega0]")
        .unwrap();
    let srow: Vec<&str> = sweep.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(srow[scol], fig2a_theta, "sweep and fig2a disagree");
}

#[test]
fn dressed_scenario_emits_labeled_table() {
    let tmp = tempfile::tempdir().unwrap();
    let files = run_to_dir(&ExperimentConfig::bare(Scenario::Dressed), tmp.path());
    assert!(files.iter().any(|f| f.ends_with("dressed.csv")));
    let text = fs::read_to_string(tmp.path().join("dressed.csv")).unwrap();
    assert!(text.lines().count() > 10);
    assert!(text.contains("+D"));
    // metadata carries the resolved config and its content hash
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("dressed_meta.json")).unwrap())
            .unwrap();
    assert!(meta["config_sha256"].as_str().unwrap().len() == 64);
    assert_eq!(meta["config"]["params"]["g00"], 0.06);
}

#[test]
fn fig1_rows_flag_regime_validity() {
    let tmp = tempfile::tempdir().unwrap();
    run_to_dir(&ExperimentConfig::bare(Scenario::Fig1), tmp.path());
    let text = fs::read_to_string(tmp.path().join("fig1.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let valid_d = header.iter().position(|h| *h == "valid_DR").unwrap();
    // below the dispersive threshold the row is flagged, not dropped
    let low: Vec<&str> = text
        .lines()
        .find(|l| l.starts_with("1,"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(low[valid_d], "0");
    let high: Vec<&str> = text
        .lines()
        .find(|l| l.starts_with("8,"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(high[valid_d], "1");
    assert_eq!(text.lines().count(), 102);
}
