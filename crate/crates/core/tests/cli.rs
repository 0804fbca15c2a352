use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ecoepi_core::cli::{check_with_response, cmd_pullback, pullback_summary, sweep_rows, thresholds_report};
use ecoepi_core::responses::FunctionalResponse;
use ecoepi_core::scenario::Scenario;
use ecoepi_core::{ResponseSpec, Variant};

fn ecoepi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecoepi")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn thresholds_json_for_each_variant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "response.k = 0.3\n");
    let out = ecoepi(&["thresholds", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["theta_u"].as_f64().unwrap() - 1.32).abs() < 1e-12);
    assert_eq!(v["extinction"]["cond1"], true);
    assert_eq!(v["extinction"]["cond2"], true);

    let cfg = write_config(dir.path(), "model.variant = si\n");
    let v: serde_json::Value = serde_json::from_slice(&ecoepi(&["thresholds", "--config", &cfg]).stdout).unwrap();
    assert!((v["persistence_bound"].as_f64().unwrap() - 0.9 / 0.94).abs() < 1e-12);
    assert!((v["extinction"]["margin1"].as_f64().unwrap() - 0.56).abs() < 1e-12);

    let cfg = write_config(dir.path(), "model.variant = sp\n");
    let v: serde_json::Value = serde_json::from_slice(&ecoepi(&["thresholds", "--config", &cfg]).stdout).unwrap();
    assert!((v["theta_hat_u"].as_f64().unwrap() - 1.32).abs() < 1e-12);
    assert!((v["theta_hat_l_0"].as_f64().unwrap() - (0.54 - 0.05 * 1.32 * 1.32) / 0.8).abs() < 1e-12);

    let text = ecoepi(&["thresholds", "--format", "text"]);
    assert!(String::from_utf8(text.stdout).unwrap().contains("theta_u = 1.32"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ecoepi(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ecoepi(&["thresholds", "--bogus"]).status.code(), Some(2));
    assert_eq!(ecoepi(&["--help"]).status.code(), Some(0));

    let cfg = write_config(dir.path(), "model.mu = 1.5\nmodel.c = 1.0\n");
    let out = ecoepi(&["thresholds", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu < c"));

    let cfg = write_config(dir.path(), "noise.eps = 1.2\n");
    let out = ecoepi(&["check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise.eps"));

    let cfg = write_config(dir.path(), "model.mu = 0.5\nnot a pair\n");
    let out = ecoepi(&["thresholds", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));

    let missing = dir.path().join("nope.cfg").display().to_string();
    assert_eq!(ecoepi(&["thresholds", "--config", &missing]).status.code(), Some(3));

    let out_dir = dir.path().join("o").display().to_string();
    let cfg = write_config(dir.path(), "integrator.max_steps = 5\n");
    let out = ecoepi(&["simulate", "--config", &cfg, "--out", &out_dir, "--x0", "1,1,1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!Path::new(&out_dir).join("trajectory.csv").exists());
}

#[test]
fn simulate_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "noise.kind = constant\n");
    let out_dir = dir.path().join("sim");
    let out = ecoepi(&[
        "simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--t1", "60", "--x0", "7,0,0",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out_dir.join("summary.json"));
    assert!((summary["terminal"][0].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(summary["terminal"][1], 0.0);
    let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,S,I,P"));
    assert_eq!(lines.next(), Some("0.0,7.0,0.0,0.0"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 60.0);

    // start well inside K_delta
    let out_dir = dir.path().join("inside");
    let out = ecoepi(&["simulate", "--out", out_dir.to_str().unwrap(), "--t1", "200", "--x0", "1,0.5,0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["region_membership"], true);
    assert_eq!(summary["region_membership_terminal"], true);
    assert!(summary["terminal_levels"]["M"].as_f64().is_some());
    assert!(summary["min_component"].as_f64().unwrap() >= 0.0);

    let out_dir = dir.path().join("neg");
    let out = ecoepi(&["simulate", "--out", out_dir.to_str().unwrap(), "--x0", "1,-0.5,0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());

    let out_dir = dir.path().join("si");
    let cfg = write_config(dir.path(), "model.variant = si\n");
    let out = ecoepi(&["simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--x0", "1,0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,S,I\n"));
}

#[test]
fn pullback_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "response.k = 0.3\npullback.grid_count = 12\n");
    let out_dir = dir.path().join("pb");
    let out = ecoepi(&["pullback", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let est = json(&out_dir.join("estimate.json"));
    for key in ["omega_seed", "ladder", "per_rung_dist", "converged", "diameter", "endpoints", "s_star"] {
        assert!(est.get(key).is_some(), "missing {key}");
    }
    assert_eq!(est["omega_seed"], 3);
    assert_eq!(est["per_rung_dist"].as_array().unwrap().len(), 8);
    assert_eq!(est["converged"], true);
    assert!(est["diameter"].as_f64().unwrap() <= 1e-5);
    let csv = fs::read_to_string(out_dir.join("endpoints.csv")).unwrap();
    assert!(csv.starts_with("x0_index,S,I,P\n"));
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn pullback_reports_nonconvergence_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::default();
    s.pullback.ladder = vec![0.5, 1.0];
    s.pullback.grid_count = 8;
    s.output_dir = dir.path().to_path_buf();
    let summary = cmd_pullback(&s).unwrap();
    assert!(!summary.converged);
    assert!(dir.path().join("estimate.json").exists());
}

#[test]
fn check_command() {
    let out = ecoepi(&["check"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "response.family = holling4\n");
    let out = ecoepi(&["check", "--config", &cfg, "--format", "text"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL response.f_nondecreasing_in_s"));
    assert!(text.contains("witness"));

    let cfg = write_config(dir.path(), "model.mu = 1\nmodel.c = 1\n");
    assert_eq!(ecoepi(&["check", "--config", &cfg]).status.code(), Some(2));
}

/// `f = kS(1 + I)` increases with infected prey.
struct GrowsWithI;

impl FunctionalResponse for GrowsWithI {
    fn f(&self, s: f64, i: f64, _p: f64) -> f64 {
        0.3 * s * (1.0 + i)
    }

    fn g(&self, s: f64, i: f64, p: f64) -> f64 {
        if p == 0.0 {
            0.0
        } else {
            p / (1.0 + s + i + p)
        }
    }
}

#[test]
fn check_catches_injected_response() {
    let report = check_with_response(&Scenario::default(), Some(&GrowsWithI)).unwrap();
    assert!(!report.passed);
    let entry = report.get("response.f_nonincreasing_in_i").unwrap();
    assert!(!entry.passed);
    let w = entry.witness.as_ref().unwrap();
    assert!(w.y.is_some() && w.value_y.unwrap() > w.value_x);
    assert!(report.get("response.f_nondecreasing_in_s").unwrap().passed);
}

#[test]
fn sweep_margin_decreases_in_beta() {
    let mut s = Scenario::default();
    s.pullback.grid_count = 8;
    let values: Vec<String> = ["0.1", "0.5", "2.0"].iter().map(|v| v.to_string()).collect();
    let rows = sweep_rows(&s, "model.beta", &values).unwrap();
    let margins: Vec<f64> = rows.iter().map(|r| r.margin1.unwrap()).collect();
    assert!(margins.windows(2).all(|w| w[1] < w[0]), "{margins:?}");
    for (row, beta) in rows.iter().zip([0.1, 0.5, 2.0]) {
        assert!((row.margin1.unwrap() - (1.0 - beta * 2.2)).abs() < 1e-12);
        assert!(row.error.is_none());
    }
}

#[test]
fn sweep_of_one_value_matches_single_commands() {
    let mut s = Scenario::default();
    s.pullback.grid_count = 10;
    let rows = sweep_rows(&s, "response.k", &["0.3".to_string()]).unwrap();
    let mut single = s.clone();
    single.response = Some(ResponseSpec::holling1(0.3));
    let th = thresholds_report(&single).unwrap();
    let pb = pullback_summary(&single).unwrap();
    let row = &rows[0];
    assert_eq!(row.theta_u, th.get("theta_u"));
    assert_eq!(row.theta_l, th.get("theta_l_delta"));
    assert_eq!(row.persistence_bound, th.get("persistence_bound"));
    assert_eq!(row.margin2, th.extinction.margin2);
    assert_eq!(row.diameter, Some(pb.diameter));
    assert_eq!(row.converged, Some(pb.converged));
}

#[test]
fn sweep_across_predator_boundary() {
    // cond2 holds for k < delta1 / (gamma * Theta^u / a^u) = 0.8 / 1.32
    let boundary = 0.8 / (0.6 * 2.2);
    let mut s = Scenario::default();
    s.pullback.grid_count = 16;
    let values: Vec<String> = [0.2, 0.4, 0.55, 1.5, 3.0].iter().map(|v| v.to_string()).collect();
    let rows = sweep_rows(&s, "response.k", &values).unwrap();
    for row in &rows {
        let k: f64 = row.value.parse().unwrap();
        assert_eq!(row.cond2, Some(k < boundary));
        if k < boundary {
            assert!(row.diameter.unwrap() <= 1e-5, "k={k}: {:?}", row.diameter);
        }
    }
    // well beyond the boundary the predators persist in the interior
    assert!(rows.last().unwrap().diameter.unwrap() > 1e-5);
}

#[test]
fn sweep_cli_and_row_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pullback.grid_count = 6\npullback.ladder = 2,4,8\n");
    let out_dir = dir.path().join("sw");
    let out = ecoepi(&[
        "sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--key", "model.mu", "--values", "0.4,2.0,abc",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["value", "theta_u", "theta_l", "persistence_bound", "margin1", "cond1", "margin2", "cond2", "diameter", "converged", "error"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0][10].is_empty());
    assert!(rows[1][10].contains("mu < c"));
    assert!(rows[2][10].contains("model.mu"));

    let out = ecoepi(&["sweep", "--out", out_dir.to_str().unwrap(), "--key", "model.zeta", "--values", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn variant_defaults_flow_through() {
    let s = Scenario {
        variant: Variant::Sp,
        ..Scenario::default()
    };
    assert!((s.delta() - 0.066).abs() < 1e-12);
    let report = thresholds_report(&s).unwrap();
    assert_eq!(report.extinction.cond1, None);
}
