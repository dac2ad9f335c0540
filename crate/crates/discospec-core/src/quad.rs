//! Gauss-Legendre quadrature nodes.

use std::sync::OnceLock;

/// 16-point Gauss-Legendre rule on [-1, 1] as (node, weight) pairs.
///
/// Computed once by Newton iteration on the Legendre polynomial; exact to
/// machine precision for polynomials of degree <= 31.
pub fn gauss16() -> &'static [(f64, f64); 16] {
    static RULE: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut rule = [(0.0, 0.0); 16];
        let n = 16usize;
        for k in 0..n {
            // Chebyshev-based initial guess for the k-th root.
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_and_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_and_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule[n - 1 - k] = (x, w);
        }
        rule
    })
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = gauss16();
        // integral of x^k over [-1,1]
        for k in 0..=31 {
            let got: f64 = rule.iter().map(|&(x, w)| w * x.powi(k)).sum();
            let expect = if k % 2 == 0 {
                2.0 / (k as f64 + 1.0)
            } else {
                0.0
            };
            assert_abs_diff_eq!(got, expect, epsilon = 2e-14);
        }
    }

    #[test]
    fn weights_sum_to_two() {
        let s: f64 = gauss16().iter().map(|&(_, w)| w).sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn integrates_oscillatory_integrand_well() {
        // one cell of width 1/256 at wavenumber 2k = 100
        let h: f64 = 1.0 / 256.0;
        let om = 100.0;
        let got: f64 = gauss16()
            .iter()
            .map(|&(x, w)| w * (h / 2.0) * (om * (0.5 + x * h / 2.0)).cos())
            .sum();
        let expect = ((om * (0.5 + h / 2.0)).sin() - (om * (0.5 - h / 2.0)).sin()) / om;
        assert_abs_diff_eq!(got, expect, epsilon = 1e-16);
    }
}
