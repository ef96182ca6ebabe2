//! Gauss-Legendre quadrature rules on arbitrary intervals.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Roots of the Legendre polynomial are located by Newton iteration
/// from the Chebyshev-like initial guess; accurate to machine
/// precision for the small orders used here.
pub fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Points and weights of the n-point rule mapped to [a, b].
pub fn rule_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = legendre_rule(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    xs.iter()
        .zip(ws.iter())
        .map(|(&x, &w)| (mid + half * x, half * w))
        .collect()
}

/// Integrate f over [a, b] with an n-point rule.
pub fn integrate<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    rule_on(a, b, n).iter().map(|&(x, w)| w * f(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_are_exact_for_polynomials() {
        // n-point rule is exact up to degree 2n-1.
        for n in 1..=12 {
            let deg = 2 * n - 1;
            let val = integrate(0.0, 1.0, n, |x| x.powi(deg as i32));
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((val - exact).abs() < 1e-14, "n={n} deg={deg}");
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 5, 10, 16] {
            let total: f64 = rule_on(-2.0, 3.0, n).iter().map(|&(_, w)| w).sum();
            assert!((total - 5.0).abs() < 1e-13);
        }
    }

    #[test]
    fn smooth_integrand_converges() {
        let exact = 1.0 - (-1.0f64).exp();
        let val = integrate(0.0, 1.0, 12, |x| (-x).exp());
        assert!((val - exact).abs() < 1e-14);
    }
}
