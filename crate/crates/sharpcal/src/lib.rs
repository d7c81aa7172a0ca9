//! Calibration and sharpness diagnostics for probabilistic forecast
//! sequences.
//!
//! Given a horizon of forecast laws F_1..F_T paired with truth laws
//! G_1..G_T, the toolkit answers four questions:
//!
//! * **Is the sequence calibrated?**  Finite calibration asks the averaged
//!   cdf identity `(1/T) sum_i G_i(F_i^{-1}(p)) = p` to hold at every
//!   level p; [`calib`] measures its residuals, tracks them along growing
//!   horizons, and samples the randomized PIT with a Kolmogorov-Smirnov
//!   verdict.
//! * **How sharp is it allowed to be?**  [`sharp`] computes the index- and
//!   level-conditioned variance decompositions of the compound draw,
//!   verifies the sharpness inequality — average forecast variance no
//!   smaller than average truth variance — on calibrated scenarios, and
//!   reports the equality diagnostics side by side without ever equating
//!   the two conditionings.
//! * **Does simulation agree with the formulas?**  [`probe`]'s Monte-Carlo
//!   oracle estimates the compound variance and the conditional
//!   index-given-level law, and its calibration-constrained random search
//!   hunts for forecasters sharper than the truth — recording, never
//!   assuming, what it finds.
//! * **Which scenarios exercise which regime?**  [`scenarios`] constructs
//!   ideal, climatological, compensated, shifted, and block-repeated
//!   families covering equality, strict inequality, and outright
//!   miscalibration.
//!
//! Laws ([`dist`]) are uniform, normal, tabulated piecewise-linear
//! quantiles, and finite mixtures, all serializing to a stable JSON wire
//! format; quadrature lives in [`quad`] and every numeric tolerance sits
//! in [`tol`] next to its justification.

pub mod calib;
pub mod dist;
pub mod error;
pub mod probe;
pub mod quad;
pub mod scenarios;
pub mod sharp;
pub mod tol;

pub use error::{Error, Result};
