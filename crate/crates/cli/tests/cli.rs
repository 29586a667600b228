//! End-to-end runs of the `relax` binary: exit codes, output schemas, and
//! the numeric values the fixtures pin down.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

/// Five-state chain with wells at 0 (H=3) and 2 (H=1) over ground state 4.
const CHAIN: &str = "landscape v1
mode metropolis
states 5
s 0 3
s 1 10
s 2 1
s 3 8
s 4 0
e 0 1
e 1 2
e 2 3
e 3 4
";

fn relax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relax"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_fixture(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).expect("fixture write");
    path
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "expected success, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout should be JSON")
}

#[test]
fn validate_accepts_reversible_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_fixture(dir.path(), "chain.txt", CHAIN);
    let out = relax(&["validate", file.to_str().unwrap()]);
    let report = stdout_json(&out);
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["n_states"], 5);
    assert_eq!(report["n_edges"], 4);
}

#[test]
fn validate_lists_broken_edge_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // Explicit costs with mismatched levels: 0 + 2 != 1 + 0.5.
    let file = write_fixture(
        dir.path(),
        "broken.txt",
        "landscape v1\nmode explicit\nstates 2\ns 0 0\ns 1 1\ne 0 1 2 0.5\n",
    );
    let out = relax(&["validate", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], Value::Bool(false));
    let text = report["violations"][0].as_str().unwrap();
    assert!(text.contains("(0,1)"), "violation should name the edge: {text}");
}

#[test]
fn validate_reports_parse_errors_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_fixture(
        dir.path(),
        "malformed.txt",
        "landscape v1\nmode metropolis\nstates 2\ns 0\ns 1 1\ne 0 1\n",
    );
    let out = relax(&["validate", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 4"), "stderr should cite the line: {stderr}");
}

#[test]
fn analyze_chain_fixture_with_oracle_and_gates() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_fixture(dir.path(), "chain.txt", CHAIN);
    let out = relax(&["analyze", file.to_str().unwrap(), "--oracle", "--gates", "s0", "s4"]);
    let payload = stdout_json(&out);
    assert_eq!(payload["report"]["gamma_m"], 7.0);
    assert_eq!(payload["report"]["metastable_set"], serde_json::json!([0, 2]));
    assert_eq!(payload["report"]["ground_states"], serde_json::json!([4]));
    assert_eq!(payload["oracle_match"], Value::Bool(true));
    assert_eq!(payload["necessity"]["pass"], Value::Bool(true));
    assert_eq!(payload["gates"]["minimal_gates"], serde_json::json!([[1]]));
    assert_eq!(payload["gates"]["phi"], 10.0);
}

#[test]
fn capacity_probe_emits_well_formed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_fixture(dir.path(), "chain.txt", CHAIN);
    let out = relax(&[
        "capacity", "probe", file.to_str().unwrap(),
        "--a", "s0", "--b", "s4", "--betas", "1:10:1",
    ]);
    assert!(out.status.success());
    let body = String::from_utf8(out.stdout).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("beta,g,log_g"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    for row in rows {
        let g: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(g.is_finite() && g > 0.0, "g should stay positive: {row}");
    }
}

#[test]
fn capacity_pta_separates_true_set_from_control() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_fixture(dir.path(), "chain.txt", CHAIN);
    let full = stdout_json(&relax(&[
        "capacity", "pta", file.to_str().unwrap(),
        "--m", "s0", "s2", "s4", "--betas", "4:10:2",
    ]));
    // The ratio decays at rate Gamma_m = 7 when M holds all well bottoms.
    assert_eq!(full["decays"], Value::Bool(true));
    let slope = full["slope"].as_f64().unwrap();
    assert!((slope + 7.0).abs() < 0.01, "slope {slope}");

    let control = stdout_json(&relax(&[
        "capacity", "pta", file.to_str().unwrap(),
        "--m", "s0", "s4", "--betas", "4:10:2",
    ]));
    assert_eq!(control["decays"], Value::Bool(false));
}

#[test]
fn capacity_solve_cross_residual_is_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_fixture(dir.path(), "chain.txt", CHAIN);
    let payload = stdout_json(&relax(&[
        "capacity", "solve", file.to_str().unwrap(),
        "--a", "s0", "--b", "s4", "--beta", "2",
    ]));
    assert!(payload["capacity"].as_f64().unwrap() > 0.0);
    assert!(payload["cross_residual"].as_f64().unwrap() <= 1e-10);
    let potential = payload["potential"].as_array().unwrap();
    assert_eq!(potential.len(), 5);
    assert_eq!(potential[0], 1.0);
    assert_eq!(potential[4], 0.0);
}

#[test]
fn bc_quantities_match_hand_values() {
    let q7 = stdout_json(&relax(&["bc", "quantities", "--h", "0.7"]));
    assert_eq!(q7["ell_c"], 3);
    assert!((q7["gamma_c"].as_f64().unwrap() - 7.1).abs() < 1e-9);
    let warned = q7["warnings"].as_array().unwrap();
    assert!(!warned.is_empty(), "small lattice should be flagged");

    let q45 = stdout_json(&relax(&["bc", "quantities", "--h", "0.45"]));
    assert_eq!(q45["ell_c"], 5);
    assert!((q45["gamma_c"].as_f64().unwrap() - 10.55).abs() < 1e-9);
}

#[test]
fn bc_path_profile_peaks_at_gamma_c() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("path");
    let out = relax(&[
        "bc", "path", "--h", "0.7", "--L", "15",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("bc_path_summary.json")).unwrap())
            .unwrap();
    let gamma_c = summary["gamma_c"].as_f64().unwrap();
    assert!((summary["max_excess_leg1"].as_f64().unwrap() - gamma_c).abs() < 1e-12);
    assert!((summary["max_excess_leg2"].as_f64().unwrap() - gamma_c).abs() < 1e-12);

    let csv = fs::read_to_string(out_dir.join("bc_path.csv")).unwrap();
    let energies: Vec<f64> = csv
        .lines()
        .skip(1)
        .take(3)
        .map(|row| row.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    // The first two climbs away from the all-minus well.
    assert!((energies[1] - energies[0] - (4.0 - 0.7)).abs() < 1e-12);
    assert!((energies[2] - energies[1] - (2.0 - 0.7)).abs() < 1e-12);
}

#[test]
fn bc_exact_reproduces_enumerated_landscape() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exact");
    let out = relax(&[
        "bc", "exact", "--h", "0.7", "--L", "3",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let payload: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("bc_exact.json")).unwrap()).unwrap();
    assert_eq!(payload["states"], 19683);
    assert_eq!(payload["edges"], 177147);
    assert_eq!(payload["report"]["gamma_m"], 5.2);
    assert_eq!(payload["report"]["metastable_set"], serde_json::json!([0, 9841]));
    assert_eq!(payload["report"]["ground_states"], serde_json::json!([19682]));
    assert_eq!(payload["gates"]["phi"], 11.5);
    assert_eq!(payload["gates"]["optimal_saddles"].as_array().unwrap().len(), 45);
    let gates = payload["gates"]["minimal_gates"].as_array().unwrap();
    assert_eq!(gates.len(), 1);
    assert_eq!(gates[0].as_array().unwrap().len(), 36);
    assert_eq!(payload["condition"]["lattice_large_enough"], Value::Bool(false));
}

#[test]
fn bc_sim_slope_tracks_exact_exit_times() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    let out = relax(&[
        "bc", "sim", "--h", "0.7", "--L", "3",
        "--betas", "1.0:2.0:0.25", "--replicas", "200", "--seed", "42",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("bc_sim_summary.json")).unwrap())
            .unwrap();
    // Least-squares slope of the exact ln E[tau] over this beta grid,
    // from dense hitting-time solves on the enumerated 19683-state chain.
    let exact = 4.547505;
    let slope = summary["slope"].as_f64().unwrap();
    assert!(
        (slope - exact).abs() / exact < 0.10,
        "slope {slope} should be within 10% of {exact}"
    );

    let csv = fs::read_to_string(out_dir.join("bc_sim.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("beta,n,censored,mean_tau,median_tau,ln_mean"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn bc_gate_exact_fraction_clears_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("gate");
    let out = relax(&[
        "bc", "gate", "--h", "0.7", "--L", "3",
        "--beta", "3", "--replicas", "20", "--seed", "7",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("bc_gate_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["gate_size"], 36);
    let exact = summary["exact_fraction"].as_f64().unwrap();
    assert!((exact - 0.952618542130609).abs() < 1e-9);
    assert!(summary["mc_fraction"].as_f64().unwrap() > 0.8);
    let csv = fs::read_to_string(out_dir.join("bc_gate.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("beta,fraction,n,censored"));
}

#[test]
fn poly_reports_decomposition_and_shape() {
    let out = relax(&["poly", "7"]);
    assert!(out.status.success());
    let body = String::from_utf8(out.stdout).unwrap();
    assert!(body.contains("case i "), "case label: {body}");
    assert!(body.contains("s = 3, k = 1"), "decomposition: {body}");
    assert!(body.contains("minimal perimeter 12"), "perimeter: {body}");
    assert!(body.contains("###"), "shape art: {body}");
}

#[test]
fn poly_enumeration_confirms_closed_form() {
    let payload = stdout_json(&relax(&["poly", "5", "--enumerate", "--format", "json"]));
    assert_eq!(payload["enumeration"]["min_perimeter"], 10);
    assert_eq!(payload["enumeration"]["count"], 63);
    assert_eq!(payload["shape"]["min_perimeter"], 10);
}

#[test]
fn poly_error_exit_codes() {
    assert_eq!(relax(&["poly", "0"]).status.code(), Some(2));
    assert_eq!(relax(&["poly", "11", "--enumerate"]).status.code(), Some(3));
}

#[test]
fn unknown_flags_exit_two() {
    let out = relax(&["analyze", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}
