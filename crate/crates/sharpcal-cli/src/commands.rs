//! One handler per subcommand.
//!
//! Handlers own the full life of a run: load and digest inputs, resolve
//! tolerances (flag, then the SHARPCAL_DEFAULT_TOL environment variable,
//! then the scenario's own default), call the library, and emit the
//! report with its manifest.  A scenario that fails the calibration
//! hypothesis still gets its residual report written before the handler
//! returns the exit-3 failure.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use sharpcal::calib::{
    default_tolerance, finite_calibration_residual_with_tol, pit_histogram, sample_randomized_pit,
    CalibrationReport, PitHistogram, Scenario,
};
use sharpcal::probe::{equality_gap_scan, mc_oracle, minimize_sharpness_with, McOracleReport, ProbeConfig};
use sharpcal::scenarios::{make_block_repeat, ScenarioSpec};
use sharpcal::sharp::{
    asymptotic_check, theta_profile, u_decomposition, verify_sharpness_with, z_decomposition,
    UDecomposition, ZDecomposition,
};
use sharpcal::{tol, Error};

use crate::failure::Failure;
use crate::manifest::{read_input, InputDigest, RunManifest};
use crate::output::{emit, emit_plain, Format};
use crate::{
    AsymptoticArgs, BuildArgs, CalibrationArgs, DecomposeArgs, PitArgs, ProbeArgs, ScanArgs,
    SharpnessArgs, ThetaArgs, ValidateArgs,
};

/// Environment variable consulted when `--tol` is absent.
const DEFAULT_TOL_ENV: &str = "SHARPCAL_DEFAULT_TOL";

/// Parse scenario bytes, distinguishing malformed JSON (exit 2) from a
/// well-formed file that violates a construction invariant (exit 1).
fn parse_scenario(bytes: &[u8], path: &Path) -> Result<Scenario, Failure> {
    serde_json::from_slice::<Scenario>(bytes).map_err(|e| {
        let shown = path.display();
        match e.classify() {
            serde_json::error::Category::Data => {
                Failure::new(1, format!("invariant violation in {shown}: {e}"))
            }
            _ => Failure::new(2, format!("parse error in {shown}: {e}")),
        }
    })
}

fn load_scenario(path: &Path) -> Result<(Scenario, InputDigest), Failure> {
    let (bytes, digest) = read_input(path)?;
    let scenario = parse_scenario(&bytes, path)?;
    Ok((scenario, digest))
}

/// Tolerance in effect and where it came from: the `--tol` flag, the
/// environment variable, or the scenario's own default.
fn resolve_tolerance(flag: Option<f64>) -> Result<(Option<f64>, &'static str), Failure> {
    if let Some(t) = flag {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::new(2, "--tol must be a positive finite number"));
        }
        return Ok((Some(t), "flag"));
    }
    match std::env::var(DEFAULT_TOL_ENV) {
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(t) if t.is_finite() && t > 0.0 => Ok((Some(t), "env")),
            _ => Err(Failure::new(
                2,
                format!("{DEFAULT_TOL_ENV} must be a positive finite number, got {text:?}"),
            )),
        },
        Err(_) => Ok((None, "default")),
    }
}

fn require_grid(grid: usize) -> Result<usize, Failure> {
    if grid < 2 {
        return Err(Failure::new(2, "--grid must be at least 2"));
    }
    Ok(grid)
}

fn to_value<T: Serialize>(value: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(value).map_err(|e| Failure::new(4, format!("cannot serialize: {e}")))
}

/// Emit a calibration-failure report (the residual evidence) and return
/// the exit-3 failure for a hypothesis that did not hold.
fn emit_not_calibrated(
    out: Option<&Path>,
    manifest: &RunManifest,
    max_abs_residual: f64,
    tolerance: f64,
    report: &CalibrationReport,
) -> Result<(), Failure> {
    let results = json!({ "calibrated": false, "calibration": report });
    let summary = format!(
        "calibrated=false max_abs_residual={max_abs_residual:.3e} tolerance={tolerance:.3e}"
    );
    emit(out, Format::Json, manifest, &results, None, &summary)?;
    Err(Failure::new(
        3,
        format!(
            "scenario is not calibrated: max |residual| = {max_abs_residual:.6e} \
             exceeds tolerance {tolerance:.1e} (residual report written)"
        ),
    ))
}

pub fn cmd_validate(args: &ValidateArgs, command_line: &str) -> Result<(), Failure> {
    let (bytes, digest) = read_input(&args.scenario)?;
    let scenario = parse_scenario(&bytes, &args.scenario)?;
    let manifest = RunManifest::new(command_line, vec![digest], vec![], json!({}));
    let results = json!({
        "valid": true,
        "T": scenario.horizon(),
        "contains_tabulated": scenario.contains_tabulated(),
        "support": scenario.support(),
    });
    let summary = format!(
        "valid=true T={} tabulated={}",
        scenario.horizon(),
        scenario.contains_tabulated()
    );
    emit(
        args.out.as_deref(),
        Format::Json,
        &manifest,
        &results,
        None,
        &summary,
    )
}

pub fn cmd_build(args: &BuildArgs, _command_line: &str) -> Result<(), Failure> {
    let (bytes, _digest) = read_input(&args.spec)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Failure::new(2, format!("spec file is not UTF-8: {e}")))?;
    let spec = ScenarioSpec::from_json(text).map_err(Failure::from)?;
    let scenario = spec.build().map_err(Failure::from)?;
    let summary = format!(
        "family={} T={} tabulated={}",
        spec.family.name(),
        scenario.horizon(),
        scenario.contains_tabulated()
    );
    let mut body = scenario.to_json();
    body.push('\n');
    emit_plain(args.out.as_deref(), &body, &summary)
}

pub fn cmd_calibration(args: &CalibrationArgs, command_line: &str) -> Result<(), Failure> {
    let (scenario, digest) = load_scenario(&args.scenario)?;
    let grid = require_grid(args.grid.unwrap_or(tol::DEFAULT_GRID_SIZE))?;
    let (tol_opt, tol_source) = resolve_tolerance(args.tol)?;
    let effective = tol_opt.unwrap_or_else(|| default_tolerance(&scenario));
    let report =
        finite_calibration_residual_with_tol(&scenario, grid, effective).map_err(Failure::from)?;
    let manifest = RunManifest::new(
        command_line,
        vec![digest],
        vec![],
        json!({ "grid": grid, "tolerance": effective, "tolerance_source": tol_source }),
    );
    let csv = (args.format == Format::Csv).then(|| {
        let mut table = String::from("p,residual\n");
        for (p, r) in report.p_grid.iter().zip(&report.residuals) {
            table.push_str(&format!("{p},{r}\n"));
        }
        table
    });
    let summary = format!(
        "max_abs_residual={:.3e} calibrated={} tolerance={:.3e}",
        report.max_abs_residual, report.calibrated, effective
    );
    emit(
        args.out.as_deref(),
        args.format,
        &manifest,
        &to_value(&report)?,
        csv,
        &summary,
    )
}

pub fn cmd_sharpness(args: &SharpnessArgs, command_line: &str) -> Result<(), Failure> {
    let (scenario, digest) = load_scenario(&args.scenario)?;
    let grid = require_grid(args.grid.unwrap_or(tol::DEFAULT_GRID_SIZE))?;
    let (tol_opt, tol_source) = resolve_tolerance(args.tol)?;
    let effective = tol_opt.unwrap_or_else(|| default_tolerance(&scenario));
    let manifest = RunManifest::new(
        command_line,
        vec![digest],
        vec![],
        json!({ "grid": grid, "tolerance": effective, "tolerance_source": tol_source }),
    );
    match verify_sharpness_with(&scenario, grid, tol_opt) {
        Ok(report) => {
            let summary = format!(
                "gap={:.3e} calibrated=true equality_condition_met={} inequality_holds={} notes={}",
                report.gap,
                report.equality_condition_met,
                report.inequality_holds,
                report.notes.len()
            );
            emit(
                args.out.as_deref(),
                args.format,
                &manifest,
                &to_value(&report)?,
                None,
                &summary,
            )
        }
        Err(Error::NotCalibrated {
            max_abs_residual,
            tolerance,
            report,
        }) => emit_not_calibrated(
            args.out.as_deref(),
            &manifest,
            max_abs_residual,
            tolerance,
            &report,
        ),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct PitResults {
    n: usize,
    seed: u64,
    ks_statistic: f64,
    ks_threshold: f64,
    reject_uniformity: bool,
    histogram: PitHistogram,
}

pub fn cmd_pit(args: &PitArgs, command_line: &str) -> Result<(), Failure> {
    let (scenario, digest) = load_scenario(&args.scenario)?;
    if args.n == 0 {
        return Err(Failure::new(2, "--n must be at least 1"));
    }
    if args.bins == 0 {
        return Err(Failure::new(2, "--bins must be at least 1"));
    }
    let sample = sample_randomized_pit(&scenario, args.n, args.seed).map_err(Failure::from)?;
    let histogram = pit_histogram(&sample, args.bins).map_err(Failure::from)?;
    let manifest = RunManifest::new(
        command_line,
        vec![digest],
        vec![args.seed],
        json!({ "bins": args.bins, "ks_coefficient": tol::KS_REJECT_COEFF }),
    );
    let summary = format!(
        "n={} ks_statistic={:.3e} reject_uniformity={}",
        sample.n, sample.ks_statistic, sample.reject_uniformity
    );
    let csv = (args.format == Format::Csv).then(|| histogram.to_csv());
    let results = PitResults {
        n: sample.n,
        seed: sample.seed,
        ks_statistic: sample.ks_statistic,
        ks_threshold: sample.ks_threshold,
        reject_uniformity: sample.reject_uniformity,
        histogram,
    };
    emit(
        args.out.as_deref(),
        args.format,
        &manifest,
        &to_value(&results)?,
        csv,
        &summary,
    )
}

#[derive(Serialize)]
struct DecomposeResults {
    z: ZDecomposition,
    u: UDecomposition,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<McOracleReport>,
}

pub fn cmd_decompose(args: &DecomposeArgs, command_line: &str) -> Result<(), Failure> {
    let (scenario, digest) = load_scenario(&args.scenario)?;
    let seeds = args.seed.into_iter().collect::<Vec<_>>();
    let bins = args.bins.unwrap_or(20);
    if bins == 0 {
        return Err(Failure::new(2, "--bins must be at least 1"));
    }
    let manifest = RunManifest::new(
        command_line,
        vec![digest],
        seeds,
        match args.n {
            Some(n) => json!({
                "n": n,
                "bins": bins,
                "calibration_grid": tol::DEFAULT_GRID_SIZE,
                "calibration_tolerance": default_tolerance(&scenario),
            }),
            None => json!({}),
        },
    );
    let z = z_decomposition(&scenario);
    let u = u_decomposition(&scenario);
    let mc = match (args.n, args.seed) {
        (Some(n), Some(seed)) => {
            if n == 0 {
                return Err(Failure::new(2, "--n must be at least 1"));
            }
            match mc_oracle(&scenario, n, bins, seed) {
                Ok(rep) => Some(rep),
                Err(Error::NotCalibrated {
                    max_abs_residual,
                    tolerance,
                    report,
                }) => {
                    return emit_not_calibrated(
                        args.out.as_deref(),
                        &manifest,
                        max_abs_residual,
                        tolerance,
                        &report,
                    )
                }
                Err(e) => return Err(e.into()),
            }
        }
        (None, None) => None,
        // clap's `requires` wiring makes these unreachable, but the check
        // costs nothing and keeps the contract visible.
        _ => {
            return Err(Failure::new(
                2,
                "simulation needs --n and --seed together (with optional --bins)",
            ))
        }
    };
    let mut summary = format!(
        "var_h_z={:.6e} var_h_u_formula={:.6e} gap={:.3e}",
        z.var_h_z,
        u.var_h_u_formula,
        u.avg_var_f - z.avg_var_g
    );
    if let Some(rep) = &mc {
        summary.push_str(&format!(
            " var_h_mc={:.6e} se_var_h={:.1e}",
            rep.var_h_mc, rep.se_var_h
        ));
    }
    let csv = match (args.format, &mc) {
        (Format::Csv, Some(rep)) => Some(rep.to_conditional_csv()),
        _ => None,
    };
    let results = DecomposeResults { z, u, mc };
    emit(
        args.out.as_deref(),
        args.format,
        &manifest,
        &to_value(&results)?,
        csv,
        &summary,
    )
}

pub fn cmd_theta(args: &ThetaArgs, command_line: &str) -> Result<(), Failure> {
    let (scenario, digest) = load_scenario(&args.scenario)?;
    let grid = require_grid(args.grid.unwrap_or(128))?;
    let profile = theta_profile(&scenario, grid, None).map_err(Failure::from)?;
    let manifest = RunManifest::new(
        command_line,
        vec![digest],
        vec![],
        json!({ "grid": grid }),
    );
    let csv = (args.format == Format::Csv).then(|| {
        let mut table = String::from("u,theta\n");
        for (u, v) in profile.u_grid.iter().zip(&profile.values) {
            table.push_str(&format!("{u},{v}\n"));
        }
        table
    });
    let theta_max = profile.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let summary = format!("points={} theta_max={:.6e}", profile.values.len(), theta_max);
    emit(
        args.out.as_deref(),
        args.format,
        &manifest,
        &to_value(&profile)?,
        csv,
        &summary,
    )
}

fn parse_checkpoints(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<usize>().map_err(|_| {
                Failure::new(
                    2,
                    format!("--checkpoints must be comma-separated horizons, got {part:?}"),
                )
            })
        })
        .collect()
}

pub fn cmd_asymptotic(args: &AsymptoticArgs, command_line: &str) -> Result<(), Failure> {
    let (base, digest) = load_scenario(&args.scenario)?;
    let grid = require_grid(args.grid.unwrap_or(256))?;
    let checkpoints = parse_checkpoints(&args.checkpoints)?;
    let report = asymptotic_check(|t| make_block_repeat(&base, t), &checkpoints, grid)
        .map_err(Failure::from)?;
    let manifest = RunManifest::new(
        command_line,
        vec![digest],
        vec![],
        json!({ "grid": grid, "slack": report.slack, "checkpoints": checkpoints }),
    );
    let final_margin = report.rows.last().map(|r| r.margin).unwrap_or(f64::NAN);
    let summary = format!(
        "checkpoints={} final_margin={:.3e} inequality_holds={} theta_stable={}",
        report.rows.len(),
        final_margin,
        report.inequality_holds_asymptotically,
        report.theta_stable
    );
    let csv = (args.format == Format::Csv).then(|| report.to_csv());
    emit(
        args.out.as_deref(),
        args.format,
        &manifest,
        &to_value(&report)?,
        csv,
        &summary,
    )
}

pub fn cmd_probe(args: &ProbeArgs, command_line: &str) -> Result<(), Failure> {
    let (bytes, digest) = read_input(&args.config)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Failure::new(2, format!("config file is not UTF-8: {e}")))?;
    let config = ProbeConfig::from_json(text).map_err(Failure::from)?;
    let result = minimize_sharpness_with(&config).map_err(Failure::from)?;
    let manifest = RunManifest::new(
        command_line,
        vec![digest],
        vec![config.seed],
        json!({
            "knots": config.knots,
            "basis_size": config.basis_size,
            "calibration_tolerance": tol::TABULATED_CALIBRATION_TOL,
        }),
    );
    let summary = format!(
        "feasible={} infeasible={} budget={} margin={:.3e}",
        result.feasible, result.infeasible, result.budget, result.margin_vs_avg_var_g
    );
    emit(
        args.out.as_deref(),
        args.format,
        &manifest,
        &to_value(&result)?,
        None,
        &summary,
    )
}

pub fn cmd_scan(args: &ScanArgs, command_line: &str) -> Result<(), Failure> {
    let mut digests = Vec::new();
    let mut table = Vec::new();
    for path in &args.scenarios {
        let (scenario, digest) = load_scenario(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        // Two files with the same stem stay distinguishable by position.
        let id = if table.iter().any(|(existing, _)| *existing == stem) {
            format!("{stem}#{}", table.len())
        } else {
            stem
        };
        digests.push(digest);
        table.push((id, scenario));
    }
    let report = match equality_gap_scan(&table) {
        Ok(report) => report,
        Err(Error::NotCalibrated {
            max_abs_residual,
            tolerance,
            report,
        }) => {
            let manifest = RunManifest::new(command_line, digests, vec![], json!({}));
            return emit_not_calibrated(
                args.out.as_deref(),
                &manifest,
                max_abs_residual,
                tolerance,
                &report,
            );
        }
        Err(e) => return Err(e.into()),
    };
    let manifest = RunManifest::new(
        command_line,
        digests,
        vec![],
        json!({ "gap_threshold": report.gap_threshold }),
    );
    let flagged = report.rows.iter().filter(|r| r.flagged).count();
    let summary = format!("rows={} flagged={}", report.rows.len(), flagged);
    let csv = (args.format == Format::Csv).then(|| report.to_csv());
    emit(
        args.out.as_deref(),
        args.format,
        &manifest,
        &to_value(&report)?,
        csv,
        &summary,
    )
}
