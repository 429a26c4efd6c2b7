//! Gauss--Legendre nodes and weights.
//!
//! Computed by Newton iteration on the Legendre polynomial recurrence; for
//! the orders used here (up to a few hundred) the nodes converge in a
//! handful of iterations to machine precision.


/// Nodes and weights of the `n`-point Gauss--Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
// Float supplies the f64 math methods in pure no_std builds; builds whose
// dependency graph links std resolve them inherently and see this import
// as unused.
#[allow(unused_imports)]
use num_traits::Float;

pub fn gauss_legendre(n: usize) -> (alloc::vec::Vec<f64>, alloc::vec::Vec<f64>) {
    use alloc::vec::Vec;
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Tricomi-style initial guess, accurate enough for Newton to converge
        // quadratically from the first step.
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_with_derivative(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// `n`-point rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (alloc::vec::Vec<f64>, alloc::vec::Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let nodes = xs.iter().map(|x| mid + half * x).collect();
    let weights = ws.iter().map(|w| w * half).collect();
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn integrate(nodes: &[f64], weights: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        nodes.iter().zip(weights).map(|(x, w)| w * f(*x)).sum()
    }

    #[test]
    fn low_order_rules_match_known_nodes() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3.0f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);

        let (x, w) = gauss_legendre(3);
        assert!((x[1]).abs() < 1e-15);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        // An n-point rule is exact through degree 2n - 1.
        for n in [1usize, 2, 5, 16, 48] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got = integrate(&x, &w, |t| t.powi(deg as i32));
                let want = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                assert!(
                    (got - want).abs() < 5e-14,
                    "n = {n}, degree {deg}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn weights_are_positive_and_sum_to_length() {
        for n in [7usize, 48, 96, 200] {
            let (x, w) = gauss_legendre(n);
            assert!(w.iter().all(|&wi| wi > 0.0));
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-12, "n = {n}: {total}");
            // Nodes strictly increasing and interior.
            for pair in x.windows(2) {
                assert!(pair[0] < pair[1]);
            }
            assert!(x[0] > -1.0 && x[n - 1] < 1.0);
        }
    }

    #[test]
    fn mapped_rule_integrates_smooth_function() {
        let (x, w) = gauss_legendre_on(40, 0.0, 1.0);
        let got = integrate(&x, &w, |t| (3.0 * t).cos());
        let want = (3.0f64).sin() / 3.0;
        assert!((got - want).abs() < 1e-14);
        let total: f64 = w.iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-14);
        let _: Vec<f64> = x;
    }
}
