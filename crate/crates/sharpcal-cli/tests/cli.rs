//! End-to-end tests of the `sharpcal` binary: exit codes, report files,
//! seed discipline, and rerun determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sharpcal"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("write fixture");
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sharpcal")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

const IDEAL_UNIFORM_PAIR: &str = r#"{
  "T": 2,
  "forecasts": [
    {"type": "uniform", "a": 0.0, "b": 1.0},
    {"type": "uniform", "a": 1.0, "b": 2.0}
  ],
  "truths": [
    {"type": "uniform", "a": 0.0, "b": 1.0},
    {"type": "uniform", "a": 1.0, "b": 2.0}
  ]
}"#;

#[test]
fn validate_accepts_ideal_scenario() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = write(dir.path(), "ideal.json", IDEAL_UNIFORM_PAIR);
    let out = run(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("valid=true T=2"));
}

#[test]
fn validate_rejects_disordered_knots_with_exit_1() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = write(
        dir.path(),
        "bad.json",
        r#"{"T":1,"forecasts":[{"type":"tabulated_quantile","u":[0.25,0.5,0.75],"q":[0.1,0.05,0.9]}],"truths":[{"type":"uniform","a":0.0,"b":1.0}]}"#,
    );
    let out = run(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(
        err.contains("invariant violation") && err.contains("index 1"),
        "stderr should name the violation and the knot: {err}"
    );
}

#[test]
fn validate_rejects_truncated_json_with_exit_2() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = write(dir.path(), "trunc.json", r#"{"T": 2, "forec"#);
    let out = run(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("parse error"));
}

/// Build the compensated-pair scenario file via `scenario build` and
/// return its path.
fn build_compensated(dir: &Path) -> PathBuf {
    let spec = write(
        dir,
        "comp_spec.json",
        r#"{"family": "compensated_pair", "epsilon": 0.1}"#,
    );
    let target = dir.join("comp.json");
    let out = run(&[
        "scenario",
        "build",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("family=compensated_pair T=2"));
    target
}

#[test]
fn sharpness_reports_compensated_gap() {
    let dir = tempfile::tempdir().expect("tempdir");
    let scenario = build_compensated(dir.path());
    let report_path = dir.path().join("sharp.json");
    let out = run(&[
        "run",
        "sharpness",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).starts_with("gap=5.000e-3 calibrated=true"),
        "summary line: {}",
        stdout(&out)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let gap = doc["results"]["gap"].as_f64().unwrap();
    assert!((gap - 0.005).abs() < 1e-4, "gap {gap}");
    assert_eq!(doc["results"]["equality_condition_met"], true);
    assert_eq!(doc["manifest"]["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["manifest"]["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn sharpness_on_uncalibrated_scenario_exits_3_but_writes_report() {
    let dir = tempfile::tempdir().expect("tempdir");
    let spec = write(
        dir.path(),
        "shift_spec.json",
        r#"{"family": "shifted_negative", "truths": [{"type": "normal", "mu": 0.0, "sigma": 1.0}], "c": 0.5}"#,
    );
    let scenario = dir.path().join("shifted.json");
    let build = run(&[
        "scenario",
        "build",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        scenario.to_str().unwrap(),
    ]);
    assert_eq!(code(&build), 0);

    let report_path = dir.path().join("report.json");
    let out = run(&[
        "run",
        "sharpness",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(doc["results"]["calibrated"], false);
    let resid = doc["results"]["calibration"]["max_abs_residual"]
        .as_f64()
        .unwrap();
    assert!(resid > 0.1, "shifted residual should be large, got {resid}");
}

#[test]
fn pit_histogram_counts_sum_to_n() {
    let dir = tempfile::tempdir().expect("tempdir");
    let scenario = write(dir.path(), "ideal.json", IDEAL_UNIFORM_PAIR);
    let csv_path = dir.path().join("pit.csv");
    let out = run(&[
        "run",
        "pit",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "100000",
        "--seed",
        "7",
        "--bins",
        "20",
        "--format",
        "csv",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("# manifest "));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("bin_lo"))
        .collect();
    assert_eq!(rows.len(), 20);
    let total: u64 = rows
        .iter()
        .map(|row| row.split(',').nth(2).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 100_000);
}

#[test]
fn stochastic_subcommands_require_explicit_seeds() {
    let dir = tempfile::tempdir().expect("tempdir");
    let scenario = write(dir.path(), "ideal.json", IDEAL_UNIFORM_PAIR);
    // pit without --seed: refused at argument parsing.
    let pit = run(&[
        "run",
        "pit",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "1000",
    ]);
    assert_eq!(code(&pit), 2);
    assert!(stderr(&pit).contains("--seed"));
    // decompose with --n but no --seed: same refusal.
    let dec = run(&[
        "run",
        "decompose",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "20000",
    ]);
    assert_eq!(code(&dec), 2);
    assert!(stderr(&dec).contains("--seed"));
}

#[test]
fn results_section_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().expect("tempdir");
    let scenario = build_compensated(dir.path());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&[
            "run",
            "sharpness",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    let doc_a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let doc_b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&b).unwrap()).unwrap();
    let bytes_a = serde_json::to_string(&doc_a["results"]).unwrap();
    let bytes_b = serde_json::to_string(&doc_b["results"]).unwrap();
    assert_eq!(bytes_a, bytes_b, "results sections must be byte-identical");
}

#[test]
fn decompose_simulation_matches_formula_side() {
    let dir = tempfile::tempdir().expect("tempdir");
    let scenario = build_compensated(dir.path());
    let report_path = dir.path().join("dec.json");
    let out = run(&[
        "run",
        "decompose",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "50000",
        "--seed",
        "3",
        "--bins",
        "10",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let var_z = doc["results"]["z"]["var_h_z"].as_f64().unwrap();
    let var_mc = doc["results"]["mc"]["var_h_mc"].as_f64().unwrap();
    let se = doc["results"]["mc"]["se_var_h"].as_f64().unwrap();
    assert!(
        (var_mc - var_z).abs() <= 4.0 * se,
        "simulation {var_mc} vs index-side {var_z} at se {se}"
    );
    assert_eq!(doc["manifest"]["seeds"][0], 3);
}

#[test]
fn asymptotic_csv_tracks_constant_margin() {
    let dir = tempfile::tempdir().expect("tempdir");
    let scenario = build_compensated(dir.path());
    let csv_path = dir.path().join("asym.csv");
    let out = run(&[
        "run",
        "asymptotic",
        "--scenario",
        scenario.to_str().unwrap(),
        "--checkpoints",
        "2,4,8",
        "--format",
        "csv",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("inequality_holds=true"));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let margins: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('T'))
        .map(|row| row.split(',').nth(3).unwrap().parse::<f64>().unwrap())
        .collect();
    assert_eq!(margins.len(), 3);
    for m in margins {
        assert!((m - 0.005).abs() < 1e-5, "margin {m}");
    }
}

#[test]
fn probe_finds_feasible_candidates() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write(
        dir.path(),
        "probe.json",
        r#"{"truths": [{"type": "uniform", "a": 0.0, "b": 1.0}, {"type": "uniform", "a": 0.0, "b": 1.0}], "budget": 40, "seed": 5}"#,
    );
    let report_path = dir.path().join("probe_report.json");
    let out = run(&[
        "run",
        "probe",
        "--config",
        config.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(doc["results"]["feasible"].as_u64().unwrap() > 0);
    assert!(doc["results"]["margin_vs_avg_var_g"].as_f64().unwrap() >= -1e-6);
    assert_eq!(doc["results"]["all_candidates_calibrated"], true);
}

#[test]
fn probe_config_without_seed_is_refused() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write(
        dir.path(),
        "probe.json",
        r#"{"truths": [{"type": "uniform", "a": 0.0, "b": 1.0}, {"type": "uniform", "a": 0.0, "b": 1.0}], "budget": 40}"#,
    );
    let out = run(&["run", "probe", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("seed"));
}

#[test]
fn scan_flags_only_the_compensated_row() {
    let dir = tempfile::tempdir().expect("tempdir");
    let ideal = write(dir.path(), "ideal.json", IDEAL_UNIFORM_PAIR);
    let comp = build_compensated(dir.path());
    let report_path = dir.path().join("scan.json");
    let out = run(&[
        "run",
        "scan",
        "--scenario",
        ideal.to_str().unwrap(),
        "--scenario",
        comp.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("rows=2 flagged=1"));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let rows = doc["results"]["rows"].as_array().unwrap();
    assert_eq!(rows[0]["id"], "ideal");
    assert_eq!(rows[0]["flagged"], false);
    assert_eq!(rows[1]["id"], "comp");
    assert_eq!(rows[1]["flagged"], true);
}

#[test]
fn env_tolerance_override_tightens_the_hypothesis() {
    let dir = tempfile::tempdir().expect("tempdir");
    let spec = write(
        dir.path(),
        "clim_spec.json",
        r#"{"family": "climatological", "truths": [{"type": "normal", "mu": 0.0, "sigma": 1.0}, {"type": "normal", "mu": 1.0, "sigma": 1.0}]}"#,
    );
    let scenario = dir.path().join("clim.json");
    let build = run(&[
        "scenario",
        "build",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        scenario.to_str().unwrap(),
    ]);
    assert_eq!(code(&build), 0);

    // Default tolerance: the pooled forecast is calibrated.
    let ok = run(&["run", "sharpness", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "stderr: {}", stderr(&ok));

    // An absurdly tight default pushed through the environment flips the
    // verdict to a hypothesis failure.
    let strict = bin()
        .args(["run", "sharpness", "--scenario", scenario.to_str().unwrap()])
        .env("SHARPCAL_DEFAULT_TOL", "1e-16")
        .output()
        .expect("spawn sharpcal");
    assert_eq!(code(&strict), 3, "stderr: {}", stderr(&strict));
}

#[test]
fn csv_format_is_refused_where_no_table_exists() {
    let dir = tempfile::tempdir().expect("tempdir");
    let scenario = build_compensated(dir.path());
    let out = run(&[
        "run",
        "sharpness",
        "--scenario",
        scenario.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no CSV rendering"));
}
