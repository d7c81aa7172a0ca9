//! Named scenario families covering the regimes the diagnostics
//! distinguish.
//!
//! Four constructions cover the interesting cases: `make_ideal` (forecast
//! equals truth — zero gap), `make_climatological` (one shared mixture
//! forecast — positive gap whenever truth means spread out),
//! `make_compensated_pair` (calibrated, equal mean shifts, yet a strictly
//! positive gap), and `make_shifted_negative` (a deliberately uncalibrated
//! control).  `make_block_repeat` turns any bounded-support scenario into a
//! horizon family with constant averages and theta profile, which is what
//! the asymptotic checks want to see.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calib::Scenario;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::tol::DEFAULT_KNOTS;

/// Largest admissible perturbation amplitude for the compensated pair:
/// `p + eps*sin(2*pi*p)` stays strictly increasing exactly when
/// `eps < 1/(2*pi)`.
pub const MAX_COMPENSATED_EPSILON: f64 = 1.0 / (2.0 * std::f64::consts::PI);

/// Forecast each truth perfectly: F_i = G_i.
pub fn make_ideal(truths: Vec<Dist>) -> Result<Scenario> {
    Scenario::new(truths.clone(), truths, None)
}

/// Forecast the equal-weight mixture of all truths at every step.
///
/// The mixture cdf is the average of the truth cdfs, so the calibration
/// identity holds exactly; the price is a variance gap equal to the
/// dispersion of the truth means.
pub fn make_climatological(truths: Vec<Dist>) -> Result<Scenario> {
    if truths.is_empty() {
        return Err(Error::InvalidScenario("scenario needs T >= 1".into()));
    }
    let shared = if truths.len() == 1 {
        truths[0].clone()
    } else {
        Dist::mixture_of(truths.clone())?
    };
    let forecasts = vec![shared; truths.len()];
    Scenario::new(forecasts, truths, None)
}

/// Two uniform truths with forecast quantiles `p ± eps*sin(2*pi*p)`.
///
/// The sine terms cancel in the calibration sum, every mean is 1/2, and
/// the variance gap is `eps^2/2` up to tabulation error: a calibrated
/// scenario with equal mean shifts whose gap is strictly positive.
pub fn make_compensated_pair(epsilon: f64) -> Result<Scenario> {
    make_compensated_pair_with_knots(epsilon, DEFAULT_KNOTS)
}

/// Compensated pair at an explicit tabulation resolution.
pub fn make_compensated_pair_with_knots(epsilon: f64, knots: usize) -> Result<Scenario> {
    if !(epsilon > 0.0 && epsilon < MAX_COMPENSATED_EPSILON) {
        return Err(Error::InvalidArgument(format!(
            "compensated-pair epsilon must lie in (0, {MAX_COMPENSATED_EPSILON:.6}), \
             got {epsilon}"
        )));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let plus = Dist::tabulated_from_fn(knots, |p| p + epsilon * (tau * p).sin())?;
    let minus = Dist::tabulated_from_fn(knots, |p| p - epsilon * (tau * p).sin())?;
    let uniform = Dist::uniform(0.0, 1.0)?;
    Scenario::new(vec![plus, minus], vec![uniform.clone(), uniform], None)
}

/// Shift every forecast away from its truth by `c`: F_i is the law of
/// G_i + c.  A negative control — calibration fails for every c != 0.
pub fn make_shifted_negative(truths: Vec<Dist>, c: f64) -> Result<Scenario> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "shift must be finite and nonzero, got {c}; a zero shift is the \
             ideal forecaster"
        )));
    }
    let forecasts: Vec<Dist> = truths.iter().map(|g| g.translate(-c)).collect();
    Scenario::new(forecasts, truths, None)
}

/// Repeat a bounded-support scenario cyclically up to horizon `t`.
///
/// Averages, residuals, and the theta profile are invariant in `t`, which
/// makes the repeated family trivially convergent for the asymptotic
/// diagnostics.
pub fn make_block_repeat(base: &Scenario, t: usize) -> Result<Scenario> {
    let block = base.horizon();
    if t == 0 || t % block != 0 {
        return Err(Error::InvalidArgument(format!(
            "target horizon {t} is not a positive multiple of the base horizon {block}"
        )));
    }
    for (i, d) in base.forecasts().iter().enumerate() {
        if !d.has_bounded_support() {
            return Err(Error::UnboundedSupport(format!(
                "block repetition requires bounded support; forecast {i} is unbounded"
            )));
        }
    }
    for (i, d) in base.truths().iter().enumerate() {
        if !d.has_bounded_support() {
            return Err(Error::UnboundedSupport(format!(
                "block repetition requires bounded support; truth {i} is unbounded"
            )));
        }
    }
    let reps = t / block;
    let mut forecasts = Vec::with_capacity(t);
    let mut truths = Vec::with_capacity(t);
    for _ in 0..reps {
        forecasts.extend_from_slice(base.forecasts());
        truths.extend_from_slice(base.truths());
    }
    Scenario::new(forecasts, truths, base.support())
}

/// Deterministic battery of normal truths: means in [-2, 2], standard
/// deviations in [1/2, 2].
pub fn seeded_normal_truths(t: usize, seed: u64) -> Result<Vec<Dist>> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "truth battery needs t >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t)
        .map(|_| {
            let mu = rng.random_range(-2.0..2.0);
            let sigma = rng.random_range(0.5..2.0);
            Dist::normal(mu, sigma)
        })
        .collect()
}

/// Scenario family tag used by [`ScenarioSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ideal,
    Climatological,
    CompensatedPair,
    ShiftedNegative,
    BlockRepeat,
}

impl Family {
    /// The family's snake_case tag, as it appears in spec files.
    pub fn name(self) -> &'static str {
        match self {
            Family::Ideal => "ideal",
            Family::Climatological => "climatological",
            Family::CompensatedPair => "compensated_pair",
            Family::ShiftedNegative => "shifted_negative",
            Family::BlockRepeat => "block_repeat",
        }
    }
}

/// Declarative recipe for building a scenario, e.g. from a JSON file:
/// `{"family": "compensated_pair", "epsilon": 0.1}`.
///
/// Truth-based families accept either explicit `truths` or a seeded normal
/// battery via `seed` plus `T`.  Fields that a family does not consume are
/// rejected rather than silently ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truths: Option<Vec<Dist>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Scenario>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ScenarioSpec {
    /// Parse a spec from its JSON description.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Build the scenario this recipe describes.
    pub fn build(&self) -> Result<Scenario> {
        match self.family {
            Family::Ideal => {
                self.forbid(&[("epsilon", self.epsilon.is_some()), ("c", self.c.is_some()),
                              ("base", self.base.is_some()), ("knots", self.knots.is_some())])?;
                make_ideal(self.resolve_truths()?)
            }
            Family::Climatological => {
                self.forbid(&[("epsilon", self.epsilon.is_some()), ("c", self.c.is_some()),
                              ("base", self.base.is_some()), ("knots", self.knots.is_some())])?;
                make_climatological(self.resolve_truths()?)
            }
            Family::CompensatedPair => {
                self.forbid(&[("truths", self.truths.is_some()), ("c", self.c.is_some()),
                              ("base", self.base.is_some()), ("T", self.horizon.is_some()),
                              ("seed", self.seed.is_some())])?;
                let epsilon = self.require_f64("epsilon", self.epsilon)?;
                make_compensated_pair_with_knots(epsilon, self.knots.unwrap_or(DEFAULT_KNOTS))
            }
            Family::ShiftedNegative => {
                self.forbid(&[("epsilon", self.epsilon.is_some()), ("base", self.base.is_some()),
                              ("knots", self.knots.is_some())])?;
                let c = self.require_f64("c", self.c)?;
                make_shifted_negative(self.resolve_truths()?, c)
            }
            Family::BlockRepeat => {
                self.forbid(&[("truths", self.truths.is_some()), ("epsilon", self.epsilon.is_some()),
                              ("c", self.c.is_some()), ("knots", self.knots.is_some()),
                              ("seed", self.seed.is_some())])?;
                let base = self.base.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("family block_repeat requires a base scenario".into())
                })?;
                let t = self.horizon.ok_or_else(|| {
                    Error::InvalidArgument("family block_repeat requires a target T".into())
                })?;
                make_block_repeat(base, t)
            }
        }
    }

    fn forbid(&self, fields: &[(&str, bool)]) -> Result<()> {
        for (name, present) in fields {
            if *present {
                return Err(Error::InvalidArgument(format!(
                    "family {} does not take field {name}",
                    self.family.name()
                )));
            }
        }
        Ok(())
    }

    fn require_f64(&self, name: &str, value: Option<f64>) -> Result<f64> {
        value.ok_or_else(|| {
            Error::InvalidArgument(format!(
                "family {} requires field {name}",
                self.family.name()
            ))
        })
    }

    /// Explicit truths, or a seeded normal battery when `seed` and `T` are
    /// given instead.
    fn resolve_truths(&self) -> Result<Vec<Dist>> {
        match (&self.truths, self.seed, self.horizon) {
            (Some(t), None, None) => Ok(t.clone()),
            (None, Some(seed), Some(horizon)) => seeded_normal_truths(horizon, seed),
            (Some(_), _, _) => Err(Error::InvalidArgument(format!(
                "family {}: give either explicit truths or seed plus T, not both",
                self.family.name()
            ))),
            _ => Err(Error::InvalidArgument(format!(
                "family {} requires truths, or seed plus T for a normal battery",
                self.family.name()
            ))),
        }
    }
}
