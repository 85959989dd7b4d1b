//! End-to-end tests of the `netwave` binary: argument handling, exit codes,
//! and the shape of the emitted documents.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netwave"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn tmp_dir(case: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(case);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed with {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr),
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

/// A two-edge path with a genuine two-subset scheme, small enough for
/// sub-second runs.
const TINY_NETWORK: &str = "
[network]
vertices = 3
controlled = [1]

[[network.edge]]
from = 1
to = 2
length = 1.0
speed = 1.0

[[network.edge]]
from = 2
to = 3
length = 1.0
speed = 1.0

[network.scheme]
subsets = [[1], [2]]
probabilities = [0.5, 0.5]
";

fn tiny_config(case: &str, body: &str) -> PathBuf {
    let path = tmp_dir(case).join("config.toml");
    fs::write(&path, format!("{body}\n{TINY_NETWORK}")).unwrap();
    path
}

#[test]
fn parse_check_reports_network_fixture() {
    let out = bin()
        .args(["parse-check", "--config"])
        .arg(fixture("diamond.toml"))
        .output()
        .unwrap();
    let doc = stdout_of(&out);
    assert!(doc.starts_with("field,value\n"), "{doc}");
    assert!(doc.contains("kind,network"), "{doc}");
    assert!(doc.contains("vertices,6"), "{doc}");
    assert!(doc.contains("edges,7"), "{doc}");
    assert!(doc.contains("scheme_subsets,4"), "{doc}");
}

#[test]
fn parse_check_reports_study_fixture() {
    let out = bin()
        .args(["parse-check", "--format", "json", "--config"])
        .arg(fixture("diamond-forward.toml"))
        .output()
        .unwrap();
    let doc = stdout_of(&out);
    let json: serde_json::Value = serde_json::from_str(&doc).unwrap();
    assert_eq!(json["kind"], "study configuration");
    assert_eq!(json["horizon"], 5.0);
    assert_eq!(json["realizations"], 20);
}

#[test]
fn parse_check_rejects_garbage_with_validation_exit_code() {
    let path = tmp_dir("garbage").join("config.toml");
    fs::write(&path, "this is not even toml [").unwrap();
    let out = bin()
        .args(["parse-check", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_config_exits_with_validation_code() {
    let out = bin()
        .args(["parse-check", "--config", "/nonexistent/nothing.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_emits_run_report_and_trajectory() {
    let config = tiny_config(
        "simulate",
        "horizon = 1.0\nsteps = [0.05]\nmax_dx = 0.25\ncontrol = \"sin(pi*t)\"",
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    let doc = stdout_of(&out);
    assert!(doc.starts_with("metric,value\n"), "{doc}");
    assert!(doc.contains("horizon,1\n"), "{doc}");
    assert!(doc.contains("steps,20\n"), "{doc}");
    assert!(doc.contains("final_energy,"), "{doc}");

    let traj_path = tmp_dir("simulate").join("traj.json");
    let out = bin()
        .args(["simulate", "--export-trajectory", "--format", "json", "--out"])
        .arg(&traj_path)
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    stdout_of(&out);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&traj_path).unwrap()).unwrap();
    let times = json["times"].as_array().unwrap();
    assert_eq!(times.len(), 21);
    let edges = json["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 2);
    assert_eq!(edges[0]["edge"], 1);
    // One displacement profile per time, one value per grid point.
    assert_eq!(edges[0]["y"].as_array().unwrap().len(), 21);
    assert_eq!(edges[0]["y"][0].as_array().unwrap().len(), 5);
}

#[test]
fn rbm_simulate_reports_errors_and_is_reproducible() {
    let config = tiny_config(
        "rbm",
        "horizon = 1.0\nsteps = [0.05]\nmax_dx = 0.25\ncontrol = \"sin(pi*t)\"",
    );
    let run = |seed: &str| {
        bin()
            .args(["rbm-simulate", "--seed", seed, "--config"])
            .arg(&config)
            .output()
            .unwrap()
    };
    let first = run("42");
    let doc = stdout_of(&first);
    assert!(doc.contains("seed,42\n"), "{doc}");
    assert!(doc.contains("rel_w_percent,"), "{doc}");
    assert!(doc.contains("rel_y_percent,"), "{doc}");

    let again = run("42");
    // Timing rows differ between runs, so compare the error rows only.
    let errors = |s: &Output| {
        String::from_utf8(s.stdout.clone())
            .unwrap()
            .lines()
            .filter(|l| l.starts_with("rel_"))
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    assert_eq!(errors(&first), errors(&again));
    assert!(!errors(&first).is_empty());

    let other = run("43");
    assert_eq!(errors(&other).len(), 2);
}

#[test]
fn ocp_and_rocp_emit_control_documents() {
    let config = tiny_config(
        "ocp",
        "horizon = 0.5\nsteps = [0.05]\nmax_dx = 0.25\ncontrol = \"optimize\"\n\
         target = \"1\"\nalpha = 1.0\n\n[optimizer]\nmax_iters = 8",
    );
    let out = bin().args(["ocp", "--config"]).arg(&config).output().unwrap();
    let doc = stdout_of(&out);
    let mut lines = doc.lines();
    assert_eq!(lines.next(), Some("t,u_v1"));
    // Header plus one row per time grid point.
    assert_eq!(doc.lines().count(), 1 + 11);

    let out = bin()
        .args(["rocp", "--seed", "7", "--format", "json", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    let doc = stdout_of(&out);
    let json: serde_json::Value = serde_json::from_str(&doc).unwrap();
    assert_eq!(json["t"].as_array().unwrap().len(), 11);
    assert_eq!(json["controls"]["v1"].as_array().unwrap().len(), 11);
    assert!(json["cost_total"].as_f64().unwrap() > 0.0);
    assert!(json["iterations"].as_u64().is_some());
}

#[test]
fn ocp_requires_an_optimize_config() {
    let config = tiny_config(
        "ocp-fixed",
        "horizon = 0.5\nsteps = [0.05]\nmax_dx = 0.25\ncontrol = \"sin(pi*t)\"",
    );
    let out = bin().args(["ocp", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("optimize"), "{err}");
}

#[test]
fn study_forward_emits_statistics_table() {
    let config = tiny_config(
        "study-fwd",
        "horizon = 1.0\nsteps = [0.1, 0.05]\nmax_dx = 0.25\n\
         control = \"sin(pi*t)\"\nrealizations = 3\nstudy_seed = 11",
    );
    let out = bin()
        .args(["study-forward", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    let doc = stdout_of(&out);
    assert!(doc.starts_with("h,metric,mean,std\n"), "{doc}");
    for metric in ["rel_w_percent", "rel_y_percent", "time_ratio_percent", "factorization_count"] {
        assert!(doc.contains(metric), "missing {metric} in {doc}");
    }
    // Two h values, each with the full metric block.
    assert_eq!(doc.matches("rel_w_percent").count(), 2, "{doc}");

    // Same seed, same rows (timings excluded).
    let again = bin()
        .args(["study-forward", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    let stable = |d: &str| {
        d.lines()
            .filter(|l| !l.contains("seconds") && !l.contains("time_ratio"))
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    assert_eq!(stable(&doc), stable(&stdout_of(&again)));

    // --realizations overrides the config; 0 is rejected as invalid.
    let out = bin()
        .args(["study-forward", "--realizations", "0", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn study_control_emits_control_metrics() {
    let config = tiny_config(
        "study-ctrl",
        "horizon = 0.5\nsteps = [0.1, 0.05]\nmax_dx = 0.25\ncontrol = \"optimize\"\n\
         target = \"1\"\nalpha = 1.0\nrealizations = 2\nstudy_seed = 12\n\n\
         [optimizer]\nmax_iters = 25",
    );
    let out = bin()
        .args(["study-control", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    let doc = stdout_of(&out);
    assert!(doc.starts_with("h,metric,mean,std\n"), "{doc}");
    for metric in ["gap_percent", "control_l2_percent", "control_h2_percent", "unconverged_count"]
    {
        assert!(doc.contains(metric), "missing {metric} in {doc}");
    }
}

#[test]
fn validate_lemmas_covers_every_edge_and_step() {
    let out = bin()
        .args(["validate-lemmas", "--realizations", "1000", "--config"])
        .arg(fixture("diamond.toml"))
        .output()
        .unwrap();
    let doc = stdout_of(&out);
    let mut lines = doc.lines();
    assert_eq!(lines.next(), Some("lemma,edge,h,samples,lhs,bound,margin,std_error"));
    // Three rows (two mean-square moments and one exit-time estimate) per
    // (step, edge) cell: 2 steps x 7 edges.
    assert_eq!(doc.lines().count(), 1 + 3 * 2 * 7);
    assert!(doc.contains("lemma41_mean_square"), "{doc}");
    assert!(doc.contains("lemma42_exit_time"), "{doc}");
}

#[test]
fn validate_lemmas_requires_positive_sample_count() {
    let out = bin()
        .args(["validate-lemmas", "--realizations", "0", "--config"])
        .arg(fixture("diamond.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
