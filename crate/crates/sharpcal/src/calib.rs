//! Finite calibration diagnostics for forecast/truth scenario pairs.
//!
//! A scenario holds T forecast laws F_i and T truth laws G_i.  The central
//! diagnostic is the residual r(p) = (1/T) sum_i G_i(F_i^{-1}(p)) - p over a
//! dense interior grid: a calibrated scenario drives it to zero at every
//! probability level.  The module also tracks how the residual behaves as
//! the horizon grows and draws seeded randomized probability integral
//! transform (PIT) samples with a Kolmogorov-Smirnov uniformity verdict.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{Dist, DistSpec};
use crate::error::{Error, Result};
use crate::tol::{
    ANALYTIC_CALIBRATION_TOL, KS_REJECT_COEFF, TABULATED_CALIBRATION_TOL, TREND_SLACK_FACTOR,
};

/// A horizon of paired forecast and truth laws, with optional common
/// support bounds for the forecasts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    forecasts: Vec<Dist>,
    truths: Vec<Dist>,
    support: Option<(f64, f64)>,
}

/// Wire format: `{"T": ..., "forecasts": [...], "truths": [...],
/// "support": [a, b]?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(rename = "T")]
    horizon: usize,
    forecasts: Vec<DistSpec>,
    truths: Vec<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<(f64, f64)>,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(file: ScenarioFile) -> Result<Self> {
        if file.forecasts.len() != file.horizon || file.truths.len() != file.horizon {
            return Err(Error::InvalidScenario(format!(
                "T = {} but {} forecasts and {} truths",
                file.horizon,
                file.forecasts.len(),
                file.truths.len()
            )));
        }
        let forecasts = file
            .forecasts
            .into_iter()
            .map(Dist::try_from)
            .collect::<Result<Vec<_>>>()?;
        let truths = file
            .truths
            .into_iter()
            .map(Dist::try_from)
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(forecasts, truths, file.support)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        ScenarioFile {
            horizon: s.forecasts.len(),
            forecasts: s.forecasts.into_iter().map(DistSpec::from).collect(),
            truths: s.truths.into_iter().map(DistSpec::from).collect(),
            support: s.support,
        }
    }
}

impl Scenario {
    /// Pair forecasts with truths; lengths must match and be nonzero, and
    /// explicit support bounds must contain every forecast's support.
    pub fn new(
        forecasts: Vec<Dist>,
        truths: Vec<Dist>,
        support: Option<(f64, f64)>,
    ) -> Result<Self> {
        if forecasts.is_empty() {
            return Err(Error::InvalidScenario("scenario needs T >= 1".into()));
        }
        if forecasts.len() != truths.len() {
            return Err(Error::InvalidScenario(format!(
                "{} forecasts but {} truths",
                forecasts.len(),
                truths.len()
            )));
        }
        if let Some((a, b)) = support {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidScenario(format!(
                    "support bounds must be finite with a < b, got ({a}, {b})"
                )));
            }
            for (i, f) in forecasts.iter().enumerate() {
                let (lo, hi) = f.support();
                if lo < a || hi > b {
                    return Err(Error::InvalidScenario(format!(
                        "forecast {i} has support ({lo}, {hi}) outside bounds ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self {
            forecasts,
            truths,
            support,
        })
    }

    /// Number of forecast/truth pairs T.
    pub fn horizon(&self) -> usize {
        self.forecasts.len()
    }

    /// Forecast laws F_1..F_T.
    pub fn forecasts(&self) -> &[Dist] {
        &self.forecasts
    }

    /// Truth laws G_1..G_T.
    pub fn truths(&self) -> &[Dist] {
        &self.truths
    }

    /// Declared common support bounds, when present.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// Smallest interval containing every forecast's support, or `None`
    /// when some forecast is unbounded.
    pub fn forecast_support_hull(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in &self.forecasts {
            let (a, b) = f.support();
            if !(a.is_finite() && b.is_finite()) {
                return None;
            }
            lo = lo.min(a);
            hi = hi.max(b);
        }
        Some((lo, hi))
    }

    /// Whether any forecast or truth contains a tabulated law; decides the
    /// default calibration tolerance.
    pub fn contains_tabulated(&self) -> bool {
        self.forecasts
            .iter()
            .chain(&self.truths)
            .any(Dist::contains_tabulated)
    }

    /// Parse a scenario from its JSON description.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Serialize the scenario to pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }
}

/// Interior equispaced probability grid p_k = k / (n + 1), k = 1..n.
pub fn p_grid(n: usize) -> Vec<f64> {
    let denom = (n + 1) as f64;
    (1..=n).map(|k| k as f64 / denom).collect()
}

/// Default calibration tolerance for a scenario: tighter when every law is
/// parametric, looser when tabulated interpolation error is in play.
pub fn default_tolerance(s: &Scenario) -> f64 {
    if s.contains_tabulated() {
        TABULATED_CALIBRATION_TOL
    } else {
        ANALYTIC_CALIBRATION_TOL
    }
}

/// Calibration residuals over a probability grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Grid points p_k = k / (n + 1).
    pub p_grid: Vec<f64>,
    /// r(p_k) = (1/T) sum_i G_i(F_i^{-1}(p_k)) - p_k.
    pub residuals: Vec<f64>,
    /// max_k |r(p_k)|.
    pub max_abs_residual: f64,
    /// Tolerance the verdict was taken against.
    pub tolerance: f64,
    /// Whether `max_abs_residual <= tolerance`.
    pub calibrated: bool,
}

/// Residual of the calibration identity at a single level `p` in (0, 1).
pub fn residual_at(s: &Scenario, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "probability level must lie in (0, 1), got {p}"
        )));
    }
    let t = s.horizon() as f64;
    let sum: f64 = s
        .forecasts()
        .iter()
        .zip(s.truths())
        .map(|(f, g)| g.cdf(f.quantile(p)))
        .sum();
    Ok(sum / t - p)
}

/// Evaluate calibration residuals on the interior grid of `grid_size`
/// points, with the scenario's default tolerance.
pub fn finite_calibration_residual(s: &Scenario, grid_size: usize) -> Result<CalibrationReport> {
    finite_calibration_residual_with_tol(s, grid_size, default_tolerance(s))
}

/// Evaluate calibration residuals against an explicit tolerance.
pub fn finite_calibration_residual_with_tol(
    s: &Scenario,
    grid_size: usize,
    tolerance: f64,
) -> Result<CalibrationReport> {
    if grid_size == 0 {
        return Err(Error::InvalidArgument(
            "calibration grid needs at least one point".into(),
        ));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "calibration tolerance must be positive, got {tolerance}"
        )));
    }
    let grid = p_grid(grid_size);
    let mut residuals = Vec::with_capacity(grid.len());
    let mut max_abs: f64 = 0.0;
    for &p in &grid {
        let r = residual_at(s, p)?;
        max_abs = max_abs.max(r.abs());
        residuals.push(r);
    }
    Ok(CalibrationReport {
        p_grid: grid,
        residuals,
        max_abs_residual: max_abs,
        tolerance,
        calibrated: max_abs <= tolerance,
    })
}

/// Check calibration and fail loudly when it does not hold.  The failed
/// report travels inside the error so callers can still persist it.
pub fn require_calibrated(
    s: &Scenario,
    grid_size: usize,
    tolerance: Option<f64>,
) -> Result<CalibrationReport> {
    let tol = tolerance.unwrap_or_else(|| default_tolerance(s));
    let report = finite_calibration_residual_with_tol(s, grid_size, tol)?;
    if report.calibrated {
        Ok(report)
    } else {
        Err(Error::NotCalibrated {
            max_abs_residual: report.max_abs_residual,
            tolerance: tol,
            report: Box::new(report),
        })
    }
}

/// One horizon checkpoint of the calibration trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub max_abs_residual: f64,
}

/// Maximum absolute residual per horizon checkpoint, with a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub points: Vec<TrendPoint>,
    /// Tolerance the final checkpoint is held to.
    pub tolerance: f64,
    /// True when the trajectory is non-increasing within a 10% slack factor
    /// and the final checkpoint meets the tolerance.
    pub asymptotically_calibrated: bool,
}

/// Track the calibration residual of generated scenarios across growing
/// horizons.  `generator` maps a horizon T to its scenario.
pub fn asymptotic_calibration_trend<Gen>(
    mut generator: Gen,
    checkpoints: &[usize],
    grid_size: usize,
    tolerance: Option<f64>,
) -> Result<TrendReport>
where
    Gen: FnMut(usize) -> Result<Scenario>,
{
    if checkpoints.is_empty() {
        return Err(Error::InvalidArgument(
            "trend needs at least one checkpoint".into(),
        ));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "checkpoints must be strictly increasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut tol_in_effect = tolerance;
    for &horizon in checkpoints {
        let scenario = generator(horizon)?;
        if scenario.horizon() != horizon {
            return Err(Error::InvalidScenario(format!(
                "generator returned horizon {} at checkpoint {horizon}",
                scenario.horizon()
            )));
        }
        let tol = tolerance.unwrap_or_else(|| default_tolerance(&scenario));
        tol_in_effect = Some(tol_in_effect.unwrap_or(tol).max(tol));
        let report = finite_calibration_residual_with_tol(&scenario, grid_size, tol)?;
        points.push(TrendPoint {
            horizon,
            max_abs_residual: report.max_abs_residual,
        });
    }
    let tolerance = tol_in_effect.expect("at least one checkpoint");
    let non_increasing = points.windows(2).all(|w| {
        // The absolute floor keeps exact-zero trajectories from being
        // penalized for ulp-level noise.
        w[1].max_abs_residual <= w[0].max_abs_residual * TREND_SLACK_FACTOR + 1e-15
    });
    let final_ok = points.last().expect("nonempty").max_abs_residual <= tolerance;
    Ok(TrendReport {
        points,
        tolerance,
        asymptotically_calibrated: non_increasing && final_ok,
    })
}

/// A seeded randomized PIT sample with its uniformity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitSample {
    pub n: usize,
    pub seed: u64,
    /// PIT values F_I(X), X drawn from G_I, I uniform on the horizon.
    pub values: Vec<f64>,
    /// Two-sided Kolmogorov-Smirnov distance to the uniform cdf.
    pub ks_statistic: f64,
    /// Asymptotic 5% critical value 1.358 / sqrt(n).
    pub ks_threshold: f64,
    /// Whether the statistic exceeds the threshold.
    pub reject_uniformity: bool,
}

/// Draw `n` randomized PIT values from the scenario.
///
/// Each draw picks an index I uniformly over the horizon, draws
/// X ~ G_I by inverse transform from a fresh uniform variate, and emits
/// F_I(X).  The stream is a ChaCha generator seeded with `seed`, so
/// identical inputs reproduce identical samples on every platform.
pub fn sample_randomized_pit(s: &Scenario, n: usize, seed: u64) -> Result<PitSample> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "PIT sample size must be positive".into(),
        ));
    }
    let t = s.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.random_range(0..t);
        let v = loop {
            // random::<f64>() covers [0, 1); quantiles need the open
            // interval, so the (measure-zero) zero draw is rejected.
            let v: f64 = rng.random();
            if v > 0.0 {
                break v;
            }
        };
        let x = s.truths()[i].quantile(v);
        values.push(s.forecasts()[i].cdf(x));
    }
    let ks_statistic = ks_distance_to_uniform(&values);
    let ks_threshold = KS_REJECT_COEFF / (n as f64).sqrt();
    Ok(PitSample {
        n,
        seed,
        values,
        ks_statistic,
        ks_threshold,
        reject_uniformity: ks_statistic > ks_threshold,
    })
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and the uniform
/// law on (0, 1).
fn ks_distance_to_uniform(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("PIT values are never NaN"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        let hi = (k + 1) as f64 / n - v; // empirical cdf above the point
        let lo = v - k as f64 / n; // empirical cdf below the point
        d = d.max(hi).max(lo);
    }
    d
}

/// Equal-width histogram of a PIT sample over (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitHistogram {
    pub bins: usize,
    /// Bin edges 0, 1/bins, ..., 1.
    pub edges: Vec<f64>,
    /// Draw counts per bin; sums to the sample size.
    pub counts: Vec<u64>,
}

/// Bin the PIT values into `bins` equal-width cells of (0, 1).
pub fn pit_histogram(sample: &PitSample, bins: usize) -> Result<PitHistogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".into(),
        ));
    }
    let mut counts = vec![0u64; bins];
    for &v in &sample.values {
        let raw = (v * bins as f64).floor() as usize;
        counts[raw.min(bins - 1)] += 1;
    }
    let edges = (0..=bins).map(|k| k as f64 / bins as f64).collect();
    Ok(PitHistogram {
        bins,
        edges,
        counts,
    })
}

impl PitHistogram {
    /// CSV rendering with header `bin_lo,bin_hi,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (k, &count) in self.counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.edges[k],
                self.edges[k + 1],
                count
            ));
        }
        out
    }
}
