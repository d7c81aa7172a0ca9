//! Numeric oracles for the acceptance battery.
//!
//! These are deliberately written against textbook formulas — a power
//! series for the normal cdf and a midpoint rule for integrals — so the
//! battery checks the library against arithmetic it does not share.

/// Standard normal cdf via the Maclaurin series of erf.
///
/// The series is summed until the next term falls below 1e-18, which for
/// |x| <= 4 (covering every shift the battery uses) leaves the result
/// accurate to well under 1e-15 — two orders below the tightest tolerance
/// any acceptance check quotes.
pub fn phi_oracle(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// erf(z) = (2/sqrt(pi)) * sum_{k>=0} (-1)^k z^(2k+1) / (k! (2k+1)).
fn erf_series(z: f64) -> f64 {
    // `power` carries (-1)^k z^(2k+1) / k!; dividing by (2k+1) gives the
    // k-th term of the series.
    let mut power = z;
    let mut sum = z;
    for k in 1..400usize {
        power *= -z * z / k as f64;
        let term = power / (2 * k + 1) as f64;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum * std::f64::consts::FRAC_2_SQRT_PI
}

/// Midpoint rule for an integral over (0, 1); error is O(n^-2) for smooth
/// integrands, so n = 2e5 resolves the battery's closed forms to ~1e-11.
pub fn midpoint_integral<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    (0..n).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Variance of the law whose quantile function is `q`, by midpoint
/// integration of the first two moments.
pub fn variance_from_quantile<F: Fn(f64) -> f64>(q: F, n: usize) -> f64 {
    let m1 = midpoint_integral(|p| q(p), n);
    let m2 = midpoint_integral(|p| q(p) * q(p), n);
    m2 - m1 * m1
}
