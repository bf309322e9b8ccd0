//! Legendre polynomials and Gauss–Legendre nodes.

use std::f64::consts::PI;

/// Value and derivative of the degree-`n` Legendre polynomial at `x`, via the
/// three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1); nodes never sit at +-1.
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes in increasing order.
///
/// Newton iteration from Chebyshev-like initial guesses; each node is refined
/// until the update falls below a few ulps.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-3) {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Symmetric pair; the middle node of an odd rule is exactly zero.
        let mirror = n - 1 - i;
        if i == mirror {
            x = 0.0;
        }
        nodes[mirror] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[mirror] = w;
    }
    (nodes, weights)
}
