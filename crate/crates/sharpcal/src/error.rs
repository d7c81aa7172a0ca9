//! Crate-wide error type.
//!
//! Diagnostics distinguish *invalid inputs* (bad parameters, malformed
//! scenarios) from *hypothesis failures* (a scenario that is simply not
//! calibrated) and *numeric failures* (a routine unable to meet its accuracy
//! contract), because callers react differently to each: the command-line
//! front end maps them to distinct exit codes.

use crate::calib::CalibrationReport;

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A distribution parameter or knot table failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Scenario shape, lengths, or support bounds are inconsistent.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// An operation argument is out of its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The finite calibration hypothesis failed at the configured tolerance.
    /// The full residual report is carried along so callers can still write
    /// it out for inspection.
    #[error(
        "scenario is not calibrated: max |residual| = {max_abs_residual:.6e} \
         exceeds tolerance {tolerance:.1e}"
    )]
    NotCalibrated {
        max_abs_residual: f64,
        tolerance: f64,
        report: Box<CalibrationReport>,
    },

    /// An operation that requires bounded support met an unbounded forecast.
    #[error("unbounded support: {0}")]
    UnboundedSupport(String),

    /// Completing a forecast sequence to calibration pushed the inner cdf
    /// argument outside (0, 1) at some grid point.
    #[error(
        "calibration completion infeasible at p = {p:.6}: inner argument \
         {inner:.6} falls outside (0, 1)"
    )]
    InfeasibleCompletion { p: f64, inner: f64 },

    /// Completing a forecast sequence produced a non-increasing quantile.
    #[error("calibration completion non-monotone at p = {p:.6}")]
    NonMonotoneCompletion { p: f64 },

    /// The constrained random search exhausted its budget without a single
    /// feasible candidate.
    #[error(
        "search failed: 0 feasible candidates out of budget {budget} \
         ({infeasible} infeasible)"
    )]
    SearchFailed { budget: usize, infeasible: usize },

    /// A numeric routine could not meet its accuracy contract.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed JSON input.
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
