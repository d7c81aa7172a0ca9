//! Exit-code discipline.
//!
//! Every command failure carries the process exit code alongside the
//! message printed to stderr.  Library errors map onto a fixed code
//! scheme so scripts can branch on the kind of failure:
//!
//! * 1 — invariant violation (bad distribution, scenario, or argument)
//! * 2 — parse or usage error (malformed files, unreadable input)
//! * 3 — calibration hypothesis failure
//! * 4 — numeric failure (quadrature, completion)
//! * 5 — search failure (no feasible candidate)

use sharpcal::Error;

/// A failed command: exit code plus the operator-facing message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidDistribution(_)
            | Error::InvalidScenario(_)
            | Error::InvalidArgument(_)
            | Error::UnboundedSupport(_) => 1,
            Error::Parse(_) => 2,
            Error::NotCalibrated { .. } => 3,
            Error::InfeasibleCompletion { .. }
            | Error::NonMonotoneCompletion { .. }
            | Error::Numeric(_) => 4,
            Error::SearchFailed { .. } => 5,
        };
        Failure::new(code, e.to_string())
    }
}
