//! Gauss-Legendre quadrature on the open unit interval.
//!
//! Moments of a distribution are integrals of its quantile function over
//! u in (0, 1), so all quadrature here is expressed on (0, 1).  Nodes and
//! weights are generated by Newton iteration on the Legendre polynomial
//! recurrence; the default rule is cached because moment evaluation calls
//! it constantly.

use std::sync::OnceLock;

use crate::tol::DEFAULT_QUAD_NODES;

/// Nodes and weights of an n-point Gauss-Legendre rule mapped to (0, 1).
///
/// The weights sum to 1 and the rule integrates polynomials of degree
/// 2n - 1 exactly.  Panics if `n == 0`.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Symmetry: solve for the positive half on (-1, 1) and mirror.
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess, accurate enough for Newton to
        // converge in a handful of steps at any practical order.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-15 * x.abs().max(1.0) {
                let (p2, d2) = legendre_with_derivative(n, x);
                dp = d2;
                x -= p2 / d2; // one polishing step
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from (-1, 1) to (0, 1): u = (1 + x) / 2, weight halves.
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and its derivative at `x`, by the three-term
/// recurrence and the standard derivative identity.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Integrate `f` over (0, 1) with an n-point Gauss-Legendre rule.
///
/// The default order is cached; other orders build their rule on the fly.
pub fn integrate_01<F: FnMut(f64) -> f64>(n: usize, mut f: F) -> f64 {
    static DEFAULT_RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let apply = |nodes: &[f64], weights: &[f64], f: &mut F| {
        nodes
            .iter()
            .zip(weights)
            .map(|(&u, &w)| w * f(u))
            .sum::<f64>()
    };
    if n == DEFAULT_QUAD_NODES {
        let (nodes, weights) = DEFAULT_RULE.get_or_init(|| gauss_legendre_01(n));
        apply(nodes, weights, &mut f)
    } else {
        let (nodes, weights) = gauss_legendre_01(n);
        apply(&nodes, &weights, &mut f)
    }
}
