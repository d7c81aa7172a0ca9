//! Monte-Carlo oracle for the compound draw and a calibration-constrained
//! random search for the sharpest forecaster.
//!
//! The oracle samples the compound construction directly — pick an index,
//! draw from that truth, read the forecast level of the draw — and reports
//! the sample variance next to binned conditional statistics, so the
//! formula-based decompositions can be checked against simulation instead
//! of against each other.
//!
//! The search asks how small the average forecast variance can get while
//! calibration is enforced exactly: forecast candidates are sine
//! perturbations of the truth quantiles, the last forecast is solved from
//! the calibration identity on a shared grid, and every surviving
//! candidate is re-verified end to end.  Truths are pre-tabulated on that
//! same grid, so candidate and truth laws live at the same resolution and
//! the identity holds exactly at the grid points: variance differences
//! then measure sharpness, not representation artifacts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calib::{p_grid, require_calibrated, Scenario};
use crate::dist::{Dist, TabulatedQuantile};
use crate::error::{Error, Result};
use crate::sharp::{verify_sharpness_with, DecompositionReport};
use crate::tol::{
    DEFAULT_BASIS_SIZE, DEFAULT_GRID_SIZE, DEFAULT_KNOTS, MIN_ORACLE_SAMPLES,
    MIN_TABULATED_SLOPE, TENSION_GAP_THRESHOLD,
};

/// Conditional statistics of one level bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinConditional {
    pub bin_lo: f64,
    pub bin_hi: f64,
    /// Samples that landed in the bin.
    pub count: usize,
    /// Empirical P(Z = i | U in bin), one entry per index; zeros when the
    /// bin is empty.
    pub z_frequencies: Vec<f64>,
    /// Empirical E(H | U in bin).
    pub e_h: f64,
    /// Standard error of `e_h`.
    pub se_h: f64,
}

/// Simulation estimate of the compound draw's law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOracleReport {
    pub n: usize,
    pub seed: u64,
    pub u_bins: usize,
    /// Sample mean of H.
    pub mean_h: f64,
    /// Sample variance of H.
    pub var_h_mc: f64,
    /// Asymptotic standard error of `var_h_mc` (fourth-moment based).
    pub se_var_h: f64,
    /// Per-bin conditional index frequencies and H statistics.
    pub bins: Vec<BinConditional>,
}

impl McOracleReport {
    /// CSV rendering of the conditional matrix: one row per level bin,
    /// index-frequency columns last.
    pub fn to_conditional_csv(&self) -> String {
        let t = self.bins.first().map_or(0, |b| b.z_frequencies.len());
        let mut out = String::from("bin_lo,bin_hi,count,e_h,se_h");
        for i in 0..t {
            out.push_str(&format!(",p_z_{i}"));
        }
        out.push('\n');
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{}",
                b.bin_lo, b.bin_hi, b.count, b.e_h, b.se_h
            ));
            for f in &b.z_frequencies {
                out.push_str(&format!(",{f}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Simulate the compound draw on a calibrated scenario.
///
/// Each sample picks an index uniformly, draws from that truth, and
/// records the draw as H together with its forecast level U; the report
/// holds the sample variance of H and per-U-bin conditional statistics.
pub fn mc_oracle(s: &Scenario, n: usize, u_bins: usize, seed: u64) -> Result<McOracleReport> {
    require_calibrated(s, DEFAULT_GRID_SIZE, None)?;
    if n < MIN_ORACLE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "oracle needs at least {MIN_ORACLE_SAMPLES} samples, got {n}"
        )));
    }
    if u_bins == 0 {
        return Err(Error::InvalidArgument(
            "oracle needs at least one level bin".into(),
        ));
    }
    let t = s.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = Vec::with_capacity(n);
    let mut index_counts = vec![vec![0usize; t]; u_bins];
    let mut bin_sum = vec![0.0f64; u_bins];
    let mut bin_sum_sq = vec![0.0f64; u_bins];
    for _ in 0..n {
        let i = rng.random_range(0..t);
        let v = loop {
            let v: f64 = rng.random();
            if v > 0.0 {
                break v;
            }
        };
        let x = s.truths()[i].quantile(v);
        let u = s.forecasts()[i].cdf(x);
        let bin = ((u * u_bins as f64) as usize).min(u_bins - 1);
        index_counts[bin][i] += 1;
        bin_sum[bin] += x;
        bin_sum_sq[bin] += x * x;
        h.push(x);
    }

    let nf = n as f64;
    let mean_h = h.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &x in &h {
        let d = x - mean_h;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    let var_h_mc = m2 / (nf - 1.0);
    let fourth = m4 / nf;
    let se_var_h = ((fourth - var_h_mc * var_h_mc).max(0.0) / nf).sqrt();

    let bins = (0..u_bins)
        .map(|b| {
            let count: usize = index_counts[b].iter().sum();
            let cf = count as f64;
            let z_frequencies = index_counts[b]
                .iter()
                .map(|&c| if count == 0 { 0.0 } else { c as f64 / cf })
                .collect();
            let (e_h, se_h) = if count == 0 {
                (0.0, 0.0)
            } else {
                let mean = bin_sum[b] / cf;
                let var = (bin_sum_sq[b] / cf - mean * mean).max(0.0);
                (mean, (var / cf).sqrt())
            };
            BinConditional {
                bin_lo: b as f64 / u_bins as f64,
                bin_hi: (b + 1) as f64 / u_bins as f64,
                count,
                z_frequencies,
                e_h,
                se_h,
            }
        })
        .collect();

    Ok(McOracleReport {
        n,
        seed,
        u_bins,
        mean_h,
        var_h_mc,
        se_var_h,
        bins,
    })
}

/// Solve the calibration identity for the last forecast.
///
/// Given quantile functions for the first T-1 forecasts, the last
/// forecast's quantile is pinned down at every grid point p by requiring
/// the averaged cdf identity to hold there exactly; all T forecasts are
/// returned tabulated on that grid.  The completion fails when the solved
/// cdf argument leaves (0, 1) or the solved quantile stops increasing —
/// both reported with the offending grid point.
pub fn complete_calibration(
    partial_quantiles: &[&dyn Fn(f64) -> f64],
    truths: &[Dist],
    knots: usize,
) -> Result<Scenario> {
    let t = truths.len();
    if t < 2 {
        return Err(Error::InvalidArgument(
            "calibration completion needs T >= 2".into(),
        ));
    }
    if partial_quantiles.len() != t - 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} partial quantiles for T = {t}, got {}",
            t - 1,
            partial_quantiles.len()
        )));
    }
    if knots < 2 {
        return Err(Error::InvalidArgument(
            "completion grid needs at least two knots".into(),
        ));
    }
    let grid = p_grid(knots);
    let mut forecasts = Vec::with_capacity(t);
    for f in partial_quantiles {
        let q: Vec<f64> = grid.iter().map(|&p| f(p)).collect();
        forecasts.push(Dist::Tabulated(TabulatedQuantile::new(grid.clone(), q)?));
    }

    let tf = t as f64;
    let du = 1.0 / (knots + 1) as f64;
    let mut q_last: Vec<f64> = Vec::with_capacity(knots);
    for &p in &grid {
        let mut acc = 0.0;
        for (f, g) in forecasts.iter().zip(truths) {
            acc += g.cdf(f.quantile(p));
        }
        let inner = tf * p - acc;
        if !(inner > 0.0 && inner < 1.0) {
            return Err(Error::InfeasibleCompletion { p, inner });
        }
        let q = truths[t - 1].quantile(inner);
        if let Some(&prev) = q_last.last() {
            if q - prev < MIN_TABULATED_SLOPE * du {
                return Err(Error::NonMonotoneCompletion { p });
            }
        }
        q_last.push(q);
    }
    forecasts.push(Dist::Tabulated(TabulatedQuantile::new(grid, q_last)?));
    Scenario::new(forecasts, truths.to_vec(), None)
}

/// Configuration of the sharpness search, loadable from JSON:
/// `{"truths": [...], "budget": 500, "seed": 7, "basis_size": 3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub truths: Vec<Dist>,
    pub budget: usize,
    pub seed: u64,
    #[serde(default = "default_basis_size")]
    pub basis_size: usize,
    #[serde(default = "default_probe_knots")]
    pub knots: usize,
}

fn default_basis_size() -> usize {
    DEFAULT_BASIS_SIZE
}

fn default_probe_knots() -> usize {
    DEFAULT_KNOTS
}

impl ProbeConfig {
    /// Parse a configuration from its JSON description.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Outcome of the sharpness search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub budget: usize,
    /// Candidates that completed and passed the full calibration check.
    pub feasible: usize,
    /// Candidates skipped because completion or calibration failed.
    pub infeasible: usize,
    /// Whether every completed candidate also passed the calibration
    /// check (completion failures do not count against this).
    pub all_candidates_calibrated: bool,
    /// Smallest average forecast variance among feasible candidates.
    pub best_avg_var_f: f64,
    /// Average truth variance, at the search's tabulation resolution.
    pub avg_var_g: f64,
    /// best_avg_var_f - avg_var_g; because the truth side is common to all
    /// candidates, this is also the smallest gap any candidate achieved.
    pub margin_vs_avg_var_g: f64,
    /// Zero-based index of the winning candidate in the seeded stream.
    pub best_candidate_index: usize,
    /// Winning sine coefficients, one row per free forecast.
    pub best_coefficients: Vec<Vec<f64>>,
    pub best_scenario: Scenario,
    pub best_report: DecompositionReport,
}

/// Search for the calibrated forecast sequence of smallest average
/// variance over the given truths, with default basis size and grid.
pub fn minimize_sharpness(
    truths: Vec<Dist>,
    budget: usize,
    seed: u64,
    perturbation_basis_size: usize,
) -> Result<ProbeResult> {
    minimize_sharpness_with(&ProbeConfig {
        truths,
        budget,
        seed,
        basis_size: perturbation_basis_size,
        knots: DEFAULT_KNOTS,
    })
}

/// Seeded random search over sine-perturbed forecast candidates.
///
/// Candidate coefficients are drawn from an independent RNG stream per
/// candidate index, so results are reproducible and independent of
/// evaluation order.  Infeasible candidates — completion failures or
/// calibration rejections — are skipped and counted, never repaired.
pub fn minimize_sharpness_with(cfg: &ProbeConfig) -> Result<ProbeResult> {
    let t = cfg.truths.len();
    if t < 2 {
        return Err(Error::InvalidArgument("search needs T >= 2".into()));
    }
    if cfg.budget == 0 {
        return Err(Error::InvalidArgument("search budget must be >= 1".into()));
    }
    if cfg.basis_size == 0 {
        return Err(Error::InvalidArgument(
            "perturbation basis needs at least one frequency".into(),
        ));
    }
    let tab_truths: Vec<Dist> = cfg
        .truths
        .iter()
        .map(|g| Dist::tabulated_from_fn(cfg.knots, |p| g.quantile(p)))
        .collect::<Result<Vec<_>>>()?;
    let avg_var_g = tab_truths.iter().map(Dist::variance).sum::<f64>() / t as f64;

    // Coefficient box: |c_j| <= 1/(4 pi j), so a single frequency can
    // never break monotonicity on its own while larger stacks may — those
    // candidates simply come back infeasible.
    let widths: Vec<f64> = (1..=cfg.basis_size)
        .map(|j| 1.0 / (4.0 * std::f64::consts::PI * j as f64))
        .collect();

    let mut best: Option<(usize, Vec<Vec<f64>>, Scenario, DecompositionReport)> = None;
    let mut feasible = 0usize;
    let mut infeasible = 0usize;
    let mut calibration_rejections = 0usize;
    for candidate in 0..cfg.budget {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(candidate as u64 + 1);
        let coefficients: Vec<Vec<f64>> = (0..t - 1)
            .map(|_| widths.iter().map(|&w| rng.random_range(-w..w)).collect())
            .collect();
        match evaluate_candidate(&tab_truths, cfg.knots, &coefficients) {
            Ok(report_and_scenario) => {
                let (scenario, report) = report_and_scenario;
                feasible += 1;
                let better = match &best {
                    None => true,
                    Some((_, _, _, b)) => report.u.avg_var_f < b.u.avg_var_f,
                };
                if better {
                    best = Some((candidate, coefficients, scenario, report));
                }
            }
            Err(Error::InfeasibleCompletion { .. })
            | Err(Error::NonMonotoneCompletion { .. })
            | Err(Error::InvalidDistribution(_)) => {
                infeasible += 1;
            }
            Err(Error::NotCalibrated { .. }) => {
                infeasible += 1;
                calibration_rejections += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let Some((best_candidate_index, best_coefficients, best_scenario, best_report)) = best
    else {
        return Err(Error::SearchFailed {
            budget: cfg.budget,
            infeasible,
        });
    };
    let best_avg_var_f = best_report.u.avg_var_f;
    Ok(ProbeResult {
        budget: cfg.budget,
        feasible,
        infeasible,
        all_candidates_calibrated: calibration_rejections == 0,
        best_avg_var_f,
        avg_var_g,
        margin_vs_avg_var_g: best_avg_var_f - avg_var_g,
        best_candidate_index,
        best_coefficients,
        best_scenario,
        best_report,
    })
}

/// Build and fully verify one candidate scenario.
fn evaluate_candidate(
    tab_truths: &[Dist],
    knots: usize,
    coefficients: &[Vec<f64>],
) -> Result<(Scenario, DecompositionReport)> {
    let tau = 2.0 * std::f64::consts::PI;
    let closures: Vec<Box<dyn Fn(f64) -> f64 + '_>> = coefficients
        .iter()
        .zip(tab_truths)
        .map(|(ci, g)| {
            Box::new(move |p: f64| {
                let perturbation: f64 = ci
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * (tau * (j + 1) as f64 * p).sin())
                    .sum();
                g.quantile(p) + perturbation
            }) as Box<dyn Fn(f64) -> f64 + '_>
        })
        .collect();
    let refs: Vec<&dyn Fn(f64) -> f64> = closures.iter().map(|b| &**b).collect();
    let scenario = complete_calibration(&refs, tab_truths, knots)?;
    let report = verify_sharpness_with(&scenario, DEFAULT_GRID_SIZE, None)?;
    Ok((scenario, report))
}

/// One scenario's row in the equality scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub id: String,
    pub equality_condition_met: bool,
    pub gap: f64,
    /// Equal mean shifts combined with a clearly positive gap.
    pub flagged: bool,
}

/// Equality-condition scan over a batch of calibrated scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// Gap threshold above which an equal-shift row is flagged.
    pub gap_threshold: f64,
}

impl ScanReport {
    /// CSV rendering with header `id,equality_condition_met,gap,flagged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,equality_condition_met,gap,flagged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.id, r.equality_condition_met, r.gap, r.flagged
            ));
        }
        out
    }
}

/// Tabulate (equality condition, gap) across labeled calibrated scenarios,
/// flagging rows where equal mean shifts coexist with a positive gap.
pub fn equality_gap_scan(scenarios: &[(String, Scenario)]) -> Result<ScanReport> {
    let rows = scenarios
        .iter()
        .map(|(id, s)| {
            let report = crate::sharp::verify_sharpness(s)?;
            Ok(ScanRow {
                id: id.clone(),
                equality_condition_met: report.equality_condition_met,
                gap: report.gap,
                flagged: report.equality_condition_met && report.gap > TENSION_GAP_THRESHOLD,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport {
        rows,
        gap_threshold: TENSION_GAP_THRESHOLD,
    })
}
