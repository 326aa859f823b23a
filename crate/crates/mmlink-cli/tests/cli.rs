//! End-to-end checks of the binary: strict config handling, exit codes,
//! provenance, determinism, and output formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const BIN: &str = env!("CARGO_BIN_EXE_mmlink");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Data portion of a CSV file: everything except the provenance comments.
fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn config_line(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("# config: "))
        .expect("provenance config line");
    serde_json::from_str(line.strip_prefix("# config: ").unwrap()).unwrap()
}

#[test]
fn unit_less_field_is_rejected_with_exit_2() {
    let tmp = tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"beams": {"phi_r": 5}}"#);
    let out = run(&["optimize", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("phi_r"), "stderr must name the field: {msg}");
}

#[test]
fn malformed_json_is_rejected_with_exit_2() {
    let tmp = tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{not json");
    let out = run(&["optimize", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_training_budget_exits_3() {
    let tmp = tempdir().unwrap();
    // sector scans alone exceed this slot length
    let cfg = write_config(tmp.path(), r#"{"training": {"slot_time_ms": 0.1}}"#);
    let out = run(&["optimize", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_directory_exits_4() {
    let out = run(&["gain-curve", "--out", "/proc/1/not-writable"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_config_file_exits_4() {
    let out = run(&["optimize", "--config", "/does/not/exist.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn minimal_overrides_keep_defaults_elsewhere() {
    let tmp = tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"misalignment": {"theta_m_deg": [5.0]}}"#);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "adapt-sim",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = out_dir.join("adapt_trace_tm5deg.csv");
    let config = config_line(&trace);
    assert_eq!(config["seed"], 42);
    assert_eq!(config["training"]["slot_time_ms"], 10.0);
    assert_eq!(config["budget"]["p_t_mw"], 10.0);
    assert_eq!(config["misalignment"]["theta_m_deg"], serde_json::json!([5.0]));
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for (dir, seed) in [(&a, "42"), (&b, "42"), (&c, "7")] {
        let out = run(&[
            "adapt-sim",
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let name = "adapt_trace_tm9deg.csv";
    assert_eq!(data_lines(&a.join(name)), data_lines(&b.join(name)));
    assert_ne!(data_lines(&a.join(name)), data_lines(&c.join(name)));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("out");
    let args = ["expected-capacity", "--out", "out"];
    assert_eq!(run_in(tmp.path(), &args).status.code(), Some(0));
    let first = fs::read(dir.join("expected_capacity.csv")).unwrap();
    assert_eq!(run_in(tmp.path(), &args).status.code(), Some(0));
    let second = fs::read(dir.join("expected_capacity.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn provenance_header_reproduces_the_run() {
    let tmp = tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"seed": 9, "misalignment": {"theta_m_deg": [4.0, 8.0]}, "expectation": {"samples": 20000}}"#,
    );
    let first_dir = tmp.path().join("first");
    let out = run(&[
        "expected-capacity",
        "--config",
        &cfg,
        "--out",
        first_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let first_file = first_dir.join("expected_capacity.csv");

    // feed the embedded config back in; only the output dir changes
    let embedded = config_line(&first_file);
    let replay_cfg = tmp.path().join("replay.json");
    fs::write(&replay_cfg, serde_json::to_string(&embedded).unwrap()).unwrap();
    let second_dir = tmp.path().join("second");
    let out = run(&[
        "expected-capacity",
        "--config",
        replay_cfg.to_str().unwrap(),
        "--out",
        second_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let second_file = second_dir.join("expected_capacity.csv");

    assert_eq!(data_lines(&first_file), data_lines(&second_file));
    let mut a = config_line(&first_file);
    let mut b = config_line(&second_file);
    a["output"]["dir"] = serde_json::Value::Null;
    b["output"]["dir"] = serde_json::Value::Null;
    assert_eq!(a, b);
}

#[test]
fn json_format_emits_one_document_per_command() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = run(&[
        "gain-curve",
        "--format",
        "json",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("gain_curves.json")).unwrap()).unwrap();
    assert_eq!(doc["curves"].as_array().unwrap().len(), 4);
    assert_eq!(doc["config"]["seed"], 42);
    assert!(doc["version"].is_string());
}

#[test]
fn optimize_emits_json_regardless_of_format() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = run(&[
        "optimize",
        "--format",
        "csv",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("optimize.json")).unwrap()).unwrap();
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 4);
    for r in results {
        assert_eq!(r["grid_check_pass"], true);
        assert!(r["phi_r_deg"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn csv_dialect_is_plain() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = run(&["preset", "gain-curves", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = fs::read(dir.join("gain_curve_5deg.csv")).unwrap();
    assert!(!bytes.contains(&b'\r'), "LF endings only");
    let text = String::from_utf8(bytes).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "theta_deg,gain,gain_db");
    let first_row = text.lines().find(|l| l.starts_with('-')).unwrap();
    assert!(!first_row.contains(';'));
    assert_eq!(first_row.split(',').count(), 3);
}
