use std::path::Path;

use stablefield::cli::{run, Command, ExampleCommand};

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let out = dir.join(format!("{name}-out"));
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, format!("output = \"{}\"\n{body}", out.display())).unwrap();
    path
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn classify_shift_is_null() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "zshift", "seed = 1\n[family]\nexample = \"zshift_null_moving\"\nalpha = 1\nkind = \"max-stable\"\n");
    assert_eq!(run(&Command::Classify { config: cfg }, Some(1)).unwrap(), 0);
    let out = tmp.path().join("zshift-out");
    let summary = read_json(&out.join("classification.json"));
    assert_eq!(summary["summary"]["global_verdict"], "null");
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["command"], "classify");
    assert!(out.join("classification.csv").exists());
}

#[test]
fn unmet_expectation_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "identity",
        "seed = 2\nexpectation = \"vanishes\"\n[family]\nexample = \"identity_nonergodic\"\nalpha = 1\nkind = \"max-stable\"\n\
         [diagnose]\nn_paths = 200\nT = 4\n",
    );
    assert_eq!(run(&Command::Diagnose { config: cfg }, Some(1)).unwrap(), 2);
    let manifest = read_json(&tmp.path().join("identity-out").join("manifest.json"));
    assert_eq!(manifest["exit_code"], 2);
}

#[test]
fn met_expectation_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "markov",
        "seed = 3\nexpectation = \"vanishes\"\n[family]\nexample = \"markov_null\"\nalpha = 1\nkind = \"max-stable\"\n",
    );
    assert_eq!(run(&Command::Diagnose { config: cfg }, Some(1)).unwrap(), 0);
}

#[test]
fn config_errors_are_collected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad", "sed = 1\n[family]\nexample = \"zshift\"\nalpha = 3\nkind = \"sum-stable\"\n");
    let err = run(&Command::Classify { config: cfg }, Some(1)).unwrap_err().to_string();
    assert!(err.contains("sed"), "{err}");
    assert!(err.contains("seed"), "{err}");
    assert!(err.contains("alpha"), "{err}");
    assert!(err.contains("zshift_null_moving"), "{err}");
}

#[test]
fn report_bundles_series() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let code = run(&Command::Example(ExampleCommand::Run { name: "cyclic_positive".into(), output: Some(out.clone()) }), Some(1)).unwrap();
    assert_eq!(code, 0);
    assert_eq!(run(&Command::Report { dir: out.clone() }, Some(1)).unwrap(), 0);
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.lines().count() > 1, "{report}");
}
