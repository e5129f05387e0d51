use std::fs;
use std::process::Command;

use expcli::config::{ExpectedVerdict, SpectraConfig, SphereConfig};
use expcli::{emit_tables, run, ExperimentConfig, LabError};
use serde_json::Value;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

#[test]
fn unknown_key_is_a_config_error() {
    let err = ExperimentConfig::from_json(r#"{"kind":"kernel","gird":64}"#).unwrap_err();
    assert!(matches!(err, LabError::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unknown_kind_is_a_config_error() {
    let err = ExperimentConfig::from_json(r#"{"kind":"warp-drive"}"#).unwrap_err();
    assert!(matches!(err, LabError::Config(_)));
}

#[test]
fn defaults_are_materialized() {
    let cfg = ExperimentConfig::from_json(r#"{"kind":"kernel","S":1.0,"delta":0.5}"#);
    // Field names are snake_case; a capital key is unknown.
    assert!(cfg.is_err());
    let cfg = ExperimentConfig::from_json(r#"{"kind":"kernel"}"#).unwrap();
    let ExperimentConfig::Kernel(k) = &cfg else { panic!() };
    let alpha = k.alpha.expect("alpha filled");
    assert!((alpha - 1.05 * k.half_width.powi(2) * (1.0 + 1.0 / k.delta)).abs() < 1e-15);

    let cfg = ExperimentConfig::from_json(r#"{"kind":"tgcc"}"#).unwrap();
    let ExperimentConfig::Tgcc(t) = &cfg else { panic!() };
    assert_eq!(t.expect, Some(ExpectedVerdict::Pass));
    assert!(t.per_ray.is_some());

    let cfg = ExperimentConfig::from_json(r#"{"kind":"spectra","cutoff":30}"#).unwrap();
    let ExperimentConfig::Spectra(s) = &cfg else { panic!() };
    assert_eq!(s.nodes, Some(136));
}

#[test]
fn materialized_config_round_trips() {
    let cfg = ExperimentConfig::from_json(r#"{"kind":"control","seed":11}"#).unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
}

#[test]
fn expected_verdict_follows_the_pair() {
    let cfg = ExperimentConfig::from_json(
        r#"{"kind":"tgcc","manifold":{"kind":"sphere2"},"sigma":"equator"}"#,
    )
    .unwrap();
    let ExperimentConfig::Tgcc(t) = &cfg else { panic!() };
    assert_eq!(t.expect, Some(ExpectedVerdict::FailWitness));

    let cfg = ExperimentConfig::from_json(r#"{"kind":"tgcc","sigma":"x0"}"#).unwrap();
    let ExperimentConfig::Tgcc(t) = &cfg else { panic!() };
    assert_eq!(t.expect, Some(ExpectedVerdict::FailWitness));
}

#[test]
fn invalid_ranges_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"kind":"tgcc","horizon":-1}"#).is_err());
}

#[test]
fn reports_and_tables_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}/sphere.csv"));
        let cfg = ExperimentConfig::CounterexampleSphere(SphereConfig {
            out: out.clone(),
            ..SphereConfig::default()
        });
        let o = run(cfg).unwrap();
        emit_tables(&o).unwrap();
        let report = fs::read_to_string(dir.path().join(format!("run{i}/sphere.report.json"))).unwrap();
        bytes.push((fs::read(&out).unwrap(), report.replace(&format!("run{i}"), "runX")));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn csv_starts_with_schema_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectra.csv");
    let cfg = ExperimentConfig::Spectra(SpectraConfig {
        cutoff: 10.0,
        out: out.clone(),
        ..SpectraConfig::default()
    });
    let o = run(cfg).unwrap();
    assert!(o.report.pass);
    emit_tables(&o).unwrap();
    let text = fs::read_to_string(&out).unwrap();
    let (first, body) = text.split_once('\n').unwrap();
    assert_eq!(first, "#schema=spectra-sweep/1");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().next(), Some("lambda"));
    let rows: Vec<_> = rdr.records().collect::<Result<_, _>>().unwrap();
    assert!(!rows.is_empty());
    assert!(dir.path().join("spectra.report.timing.json").exists());
}

#[test]
fn cli_malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{ not json").unwrap();
    let st = lab().arg("run").arg("--config").arg(&p).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn cli_spectra_with_comma_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let st = lab()
        .args(["spectra", "--manifold", "torus2", "--sigma", "x0,y0", "--cutoff", "8", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["config"]["sigma"], serde_json::json!(["x0", "y0"]));
}

#[test]
fn cli_exit_code_tracks_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sphere.csv");
    let st = lab().args(["counterexample", "sphere", "--out"]).arg(&out).status().unwrap();
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sphere.report.json")).unwrap()).unwrap();
    let expected = if report["pass"] == Value::Bool(true) { 0 } else { 1 };
    assert_eq!(st.code(), Some(expected));
}

#[test]
fn control_seed_changes_only_seeded_fields() {
    use expcli::config::ControlConfig;
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for seed in [1u64, 1, 2] {
        let cfg = ExperimentConfig::Control(ControlConfig {
            work_cutoff: 8.0,
            lambda0: 0.5,
            seed,
            out: dir.path().join("c.json"),
            ..ControlConfig::default()
        });
        let o = run(cfg).unwrap();
        reports.push(serde_json::to_value(&o.report).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_ne!(reports[0]["result"], reports[2]["result"]);
    let mut a = reports[0]["config"].clone();
    a["seed"] = reports[2]["config"]["seed"].clone();
    assert_eq!(a, reports[2]["config"]);
}
