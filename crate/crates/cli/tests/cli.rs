use std::path::Path;
use std::process::{Command, Output};

use nsch_cli::config::RunConfig;
use serde_json::Value;

fn nsch(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsch"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, c: &RunConfig) -> String {
    let path = dir.join(name);
    std::fs::write(&path, c.to_json()).unwrap();
    path.display().to_string()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn small() -> RunConfig {
    let mut c = RunConfig::example();
    c.grid.n = 8;
    c.controls.t_end = 0.0;
    c
}

#[test]
fn minimal_run_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small());
    let out = nsch(&["run", "--config", &cfg, "--output", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["status"], "ok");
}

#[test]
fn odd_grid_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small();
    c.grid.n = 9;
    let cfg = write_config(dir.path(), "c.json", &c);
    let out = nsch(&["run", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["field"], "grid.n");
}

#[test]
fn parse_errors_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let text = small().to_json().replacen("\"grid\": {", "\"grid\": {\n    \"points\": 3,", 1);
    std::fs::write(dir.path().join("c.json"), text).unwrap();
    let out = nsch(&["run", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["field"], "grid.points");
    assert!(err["error"]["line"].as_u64().unwrap() > 1);
    assert!(err["error"]["column"].is_u64());
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsch(&["smallness"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["field"], "--config");
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small();
    c.params.paper_mode = false;
    c.params.kappa = 0.0;
    c.ic.amplitude = 1.0;
    c.controls.dt = 5.0;
    c.controls.t_end = 500.0;
    let cfg = write_config(dir.path(), "c.json", &c);
    let out = nsch(&["run", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "diverged");
    assert!(err["error"]["time"].as_f64().unwrap() > 0.0);
}

#[test]
fn paper_mode_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small();
    c.params.paper_mode = false;
    c.params.nu = 0.5;
    let cfg = write_config(dir.path(), "c.json", &c);
    let out = nsch(&["run", "--config", &cfg, "--paper-mode"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["field"], "params.nu");
    let out = nsch(&["run", "--config", &cfg, "--paper-mode", "false", "--linearized", "--seed", "5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["paper_mode"], false);
    assert_eq!(report["metadata"]["linearized"], true);
    assert_eq!(report["metadata"]["seed"], 5);
}

#[test]
fn subcommand_selects_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small();
    c.ineq_suite.trials = 0;
    c.ineq_suite.interpolation_trials = 0;
    let cfg = write_config(dir.path(), "c.json", &c);
    let out = nsch(&["ineq-suite", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["preset"], "ineq-suite");
    assert_eq!(report["result"]["reports"], Value::Array(vec![]));
}

#[test]
fn info_lists_presets_and_a_valid_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsch(&["info"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let info: Value = serde_json::from_slice(&out.stdout).unwrap();
    let presets: Vec<&str> = info["presets"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(presets, ["run", "energy-check", "smallness", "decay-study", "ineq-suite"]);
    assert_eq!(info["ic_kinds"].as_array().unwrap().len(), 4);
    RunConfig::parse(&info["example_config"].to_string()).unwrap();
}

#[test]
fn violations_map_to_exit_four() {
    let e = nsch_cli::CliError::Violation { count: 3 };
    assert_eq!(e.exit_code(), 4);
    let body = &e.to_json()["error"];
    assert_eq!(body["kind"], "inequality_violation");
    assert_eq!(body["violations"], 3);
}
