//! Eigenvalue asymptotics: the constants (a, ω, ω₀, ω₁), the two-term
//! predictions for √λ_n and √μ_n, and residual diagnostics against computed
//! spectra.
//!
//! For the Robin-right family,
//! `√λ_n = nπ + (ω + (-1)^n ω₁)/(nπ) + o(1/n)`;
//! for the Dirichlet-right family,
//! `√μ_n = γ_n + ω₀/(nπ) + o(1/n)`, `γ_n = (n + 1/2)π + (-1)^n asin(a)`.

use crate::error::{Error, Result};
use crate::problem::{BoundaryCondition, Family, ProblemSpec, Spectrum};
use serde::{Deserialize, Serialize};

/// The quadruple `(a, ω, ω₀, ω₁)`.
///
/// `ω` and `ω₁` involve the Robin coefficient `H` and are absent for
/// Dirichlet-right problems, which carry only `ω₀` in their expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub a: f64,
    pub omega: Option<f64>,
    pub omega0: f64,
    pub omega1: Option<f64>,
}

/// Leading-order lattice for a spectrum family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSequence {
    pub kind: Family,
    pub a: f64,
    pub values: Vec<f64>,
}

impl GammaSequence {
    pub fn generate(kind: Family, a: f64, len: usize) -> Self {
        let values = (0..len).map(|n| gamma(kind, a, n as u32)).collect();
        GammaSequence { kind, a, values }
    }
}

/// `γ_n` for the family: `nπ` for Robin-right, `(n+1/2)π + (-1)^n asin(a)`
/// for Dirichlet-right.
pub fn gamma(kind: Family, a: f64, n: u32) -> f64 {
    let nf = n as f64;
    match kind {
        Family::Robin => nf * std::f64::consts::PI,
        Family::Dirichlet => {
            (nf + 0.5) * std::f64::consts::PI + if n % 2 == 0 { a.asin() } else { -a.asin() }
        }
    }
}

/// Asymptotic constants of the problem:
/// `a = (a1 - a1⁻¹)/(a1 + a1⁻¹)`,
/// `ω₀ = a2/(a1 + a1⁻¹) + (1/2)∫₀¹ q + h`,
/// `ω = ω₀ + H`,
/// `ω₁ = a2/(a1 + a1⁻¹) + a·[∫_{1/2}¹ q + H - ((1/2)∫₀¹ q + h)]`.
pub fn constants(problem: &ProblemSpec) -> Result<AsymptoticConstants> {
    problem.validate()?;
    let a1 = problem.jump.a1;
    let a2 = problem.jump.a2;
    let denom = a1 + 1.0 / a1;
    let a = (a1 - 1.0 / a1) / denom;
    let half_int_q = 0.5 * problem.q.integrate(0.0, 1.0)?;
    let omega0 = a2 / denom + half_int_q + problem.h;
    let (omega, omega1) = match problem.right {
        BoundaryCondition::Robin(big_h) => {
            let tail_q = problem.q.integrate(0.5, 1.0)?;
            let omega1 = a2 / denom + a * (tail_q + big_h - (half_int_q + problem.h));
            (Some(omega0 + big_h), Some(omega1))
        }
        BoundaryCondition::Dirichlet => (None, None),
    };
    Ok(AsymptoticConstants {
        a,
        omega,
        omega0,
        omega1,
    })
}

/// Two-term prediction of `√λ_n` (Robin family) or `√μ_n` (Dirichlet
/// family). For `n = 0` only the leading term is returned, since the `1/(nπ)`
/// correction is undefined there.
pub fn predict_sqrt(kind: Family, c: &AsymptoticConstants, n: u32) -> f64 {
    let lead = gamma(kind, c.a, n);
    if n == 0 {
        return lead;
    }
    let npi = n as f64 * std::f64::consts::PI;
    match kind {
        Family::Robin => {
            let omega = c.omega.unwrap_or(c.omega0);
            let omega1 = c.omega1.unwrap_or(0.0);
            let sgn = if n % 2 == 0 { 1.0 } else { -1.0 };
            lead + (omega + sgn * omega1) / npi
        }
        Family::Dirichlet => lead + c.omega0 / npi,
    }
}

/// Residuals `r_n = n (√λ_n - prediction_n)` for `n ≥ 1`, plus tail
/// statistics. The paper guarantees only `r_n → 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Residuals {
    /// `(n, r_n)` for n ≥ 1.
    pub entries: Vec<(u32, f64)>,
    /// max |r_n| over the last quartile of available indices.
    pub max_abs_last_quartile: f64,
    /// Mean of `s_n = n(√λ_n - γ_n)` over even n in the last quartile.
    /// For the Robin family this tends to `(ω + ω₁)/π`.
    pub even_tail_mean: f64,
    /// Odd-n counterpart; tends to `(ω - ω₁)/π` for the Robin family.
    pub odd_tail_mean: f64,
}

pub fn residuals(spectrum: &Spectrum, c: &AsymptoticConstants) -> Result<Residuals> {
    if spectrum.len() < 8 {
        return Err(Error::insufficient(format!(
            "need at least 8 eigenvalues for residual statistics, got {}",
            spectrum.len()
        )));
    }
    let kind = spectrum.family;
    let mut entries = Vec::with_capacity(spectrum.len().saturating_sub(1));
    let mut second_order = Vec::with_capacity(spectrum.len());
    for e in &spectrum.values {
        let sqrt_l = signed_sqrt(e.lambda);
        if e.n >= 1 {
            let r = e.n as f64 * (sqrt_l - predict_sqrt(kind, c, e.n));
            entries.push((e.n, r));
        }
        second_order.push((e.n, e.n as f64 * (sqrt_l - gamma(kind, c.a, e.n))));
    }
    let n_max = spectrum.len() - 1;
    let q_start = (3 * n_max) / 4;
    let max_abs_last_quartile = entries
        .iter()
        .filter(|(n, _)| *n as usize >= q_start)
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max);
    let tail: Vec<&(u32, f64)> = second_order
        .iter()
        .filter(|(n, _)| *n as usize >= q_start && *n >= 1)
        .collect();
    let mean_of = |parity: u32| -> f64 {
        let vals: Vec<f64> = tail
            .iter()
            .filter(|(n, _)| n % 2 == parity)
            .map(|(_, s)| *s)
            .collect();
        if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    Ok(Residuals {
        entries,
        max_abs_last_quartile,
        even_tail_mean: mean_of(0),
        odd_tail_mean: mean_of(1),
    })
}

/// `sign(λ)·√|λ|`, so slightly negative ground states do not poison the
/// residual table.
pub fn signed_sqrt(lambda: f64) -> f64 {
    lambda.signum() * lambda.abs().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::problem::Transmission;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_a_from_a1() {
        let p = ProblemSpec::new(
            Potential::zero(),
            0.0,
            BoundaryCondition::Robin(0.0),
            Transmission { a1: 2.0, a2: 0.0 },
        )
        .unwrap();
        let c = constants(&p).unwrap();
        assert_abs_diff_eq!(c.a, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn constants_worked_example() {
        // q ≡ 1, h = 0.3, H = -0.2, a1 = 2, a2 = 1
        let p = ProblemSpec::new(
            Potential::constant(1.0),
            0.3,
            BoundaryCondition::Robin(-0.2),
            Transmission { a1: 2.0, a2: 1.0 },
        )
        .unwrap();
        let c = constants(&p).unwrap();
        assert_abs_diff_eq!(c.omega0, 1.2, epsilon = 1e-14);
        assert_abs_diff_eq!(c.omega.unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.omega1.unwrap(), 0.1, epsilon = 1e-14);
    }

    #[test]
    fn constants_all_zero_for_trivial_problem() {
        let p = ProblemSpec::new(
            Potential::zero(),
            0.0,
            BoundaryCondition::Robin(0.0),
            Transmission::identity(),
        )
        .unwrap();
        let c = constants(&p).unwrap();
        assert_eq!(c.a, 0.0);
        assert_eq!(c.omega, Some(0.0));
        assert_eq!(c.omega0, 0.0);
        assert_eq!(c.omega1, Some(0.0));
    }

    #[test]
    fn predictions() {
        let c0 = AsymptoticConstants {
            a: 0.0,
            omega: Some(0.0),
            omega0: 0.0,
            omega1: Some(0.0),
        };
        assert_abs_diff_eq!(predict_sqrt(Family::Robin, &c0, 7), 7.0 * PI, epsilon = 1e-14);

        let cd = AsymptoticConstants {
            a: 0.6,
            omega: None,
            omega0: 0.0,
            omega1: None,
        };
        assert_abs_diff_eq!(
            predict_sqrt(Family::Dirichlet, &cd, 0),
            PI / 2.0 + 0.6_f64.asin(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            predict_sqrt(Family::Dirichlet, &cd, 0),
            2.2142974355881808,
            epsilon = 1e-12
        );

        let cb = AsymptoticConstants {
            a: 0.6,
            omega: Some(1.0),
            omega0: 1.2,
            omega1: Some(0.1),
        };
        assert_abs_diff_eq!(
            predict_sqrt(Family::Robin, &cb, 4),
            4.0 * PI + 1.1 / (4.0 * PI),
            epsilon = 1e-14
        );
    }

    #[test]
    fn gamma_alternation_identity() {
        // γ_{n+1} - γ_n = π - 2 (-1)^n asin(a), exactly
        let a: f64 = 0.37;
        for n in 0..40u32 {
            let diff = gamma(Family::Dirichlet, a, n + 1) - gamma(Family::Dirichlet, a, n);
            let sgn = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(diff, PI - 2.0 * sgn * a.asin(), epsilon = 1e-13);
        }
    }

    #[test]
    fn constant_shift_moves_omega0_only() {
        // q -> q + c shifts ω₀ by c/2 and leaves ω₁ unchanged
        let mk = |shift: f64| {
            let q = Potential::interpolated(|x| (2.0 * PI * x).cos() + shift, 32).unwrap();
            let p = ProblemSpec::new(
                q,
                0.3,
                BoundaryCondition::Robin(0.1),
                Transmission { a1: 1.5, a2: 0.7 },
            )
            .unwrap();
            constants(&p).unwrap()
        };
        let c0 = mk(0.0);
        let c1 = mk(0.8);
        assert_abs_diff_eq!(c1.omega0 - c0.omega0, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(c1.omega1.unwrap(), c0.omega1.unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn residuals_vanish_for_exact_free_spectrum() {
        use crate::forward::{eigenvalues, PropagatorConfig};
        let p = ProblemSpec::new(
            Potential::zero(),
            0.0,
            BoundaryCondition::Robin(0.0),
            Transmission { a1: 2.0, a2: 0.0 },
        )
        .unwrap();
        let spec = eigenvalues(&p, 20, &PropagatorConfig::default()).unwrap();
        let c = constants(&p).unwrap();
        let r = residuals(&spec, &c).unwrap();
        for (n, rn) in &r.entries {
            assert_abs_diff_eq!(*rn, 0.0, epsilon = 1e-7 * (1.0 + *n as f64));
        }
    }

    #[test]
    fn residuals_need_enough_data() {
        let spec = Spectrum {
            problem_id: "tiny".into(),
            family: Family::Robin,
            a: 0.0,
            values: (0..5)
                .map(|n| crate::problem::EigenEntry {
                    n,
                    lambda: (n as f64 * PI).powi(2),
                    residual_abs: 0.0,
                })
                .collect(),
        };
        let c = AsymptoticConstants {
            a: 0.0,
            omega: Some(0.0),
            omega0: 0.0,
            omega1: Some(0.0),
        };
        assert!(matches!(
            residuals(&spec, &c),
            Err(Error::InsufficientData(_))
        ));
    }
}
