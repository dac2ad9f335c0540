//! Numerical probes of the entire-function machinery: the function g(k) in
//! integral form, the comparison products Φ₀ and Φ, the decay of
//! E(λ) = G(λ)/Φ(λ) along the imaginary axis, and growth/zero-count scans.
//!
//! Everything here runs in log-scaled arithmetic: the imaginary-axis probes
//! reach |Im √λ| ≈ 700, far past f64 range.

use crate::error::{Error, Result};
use crate::forward::{Propagator, PropagatorConfig};
use crate::problem::ProblemSpec;
use crate::scaled::ScaledComplex;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Sampling plan for the probes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeGrid {
    /// Real-axis k samples.
    pub k_samples: Vec<f64>,
    /// Imaginary-axis t samples (log-spaced, positive increasing).
    pub t_samples: Vec<f64>,
    /// Truncation for canonical products.
    pub n_factors: usize,
}

impl ProbeGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_factors < 1000 {
            return Err(Error::contract("n_factors must be at least 1000"));
        }
        if self
            .t_samples
            .windows(2)
            .any(|w| !(w[0] > 0.0 && w[0] < w[1]))
        {
            return Err(Error::contract("t samples must be positive and increasing"));
        }
        Ok(())
    }

    /// Log-spaced grid on [lo, hi].
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let (llo, lhi) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1).max(1) as f64).exp())
            .collect()
    }
}

/// Integral form of the proof function:
/// `g(k) = ∫₀ᵇ (q̃ - q) y ỹ dx + (h̃ - h) + a1 (ã2 - a2) (y ỹ)(1/2 - 0)`
/// at `λ = k²`, for problems whose potentials agree a.e. on [b, 1] and share
/// a1. The potential difference in the integrand uses the same frozen cell
/// averages as the propagator, so the identity with the Wronskian form holds
/// to quadrature precision.
pub fn g_integral(
    problem_b: &ProblemSpec,
    problem_b_tilde: &ProblemSpec,
    b: f64,
    k: Complex64,
    cfg: &PropagatorConfig,
) -> Result<ScaledComplex> {
    let prop = Propagator::new(problem_b, cfg)?;
    let prop_t = Propagator::new(problem_b_tilde, cfg)?;
    g_integral_with(&prop, &prop_t, problem_b, problem_b_tilde, b, k)
}

/// Same as [`g_integral`] with caller-owned propagators, for probe loops.
pub fn g_integral_with(
    prop: &Propagator,
    prop_t: &Propagator,
    problem_b: &ProblemSpec,
    problem_b_tilde: &ProblemSpec,
    b: f64,
    k: Complex64,
) -> Result<ScaledComplex> {
    if problem_b.jump.a1 != problem_b_tilde.jump.a1 {
        return Err(Error::contract("g(k) requires a1 = ã1"));
    }
    if !(0.0 < b && b <= 1.0) {
        return Err(Error::domain(format!("b = {b} outside (0, 1]")));
    }
    if b < 1.0 {
        let tail_dist = problem_b.q.l2_distance_on(&problem_b_tilde.q, b, 1.0)?;
        if tail_dist > 1e-10 {
            return Err(Error::contract(format!(
                "potentials must agree on [{b}, 1]; L2 mismatch {tail_dist:.3e}"
            )));
        }
    }
    let lambda = k * k;
    let sol = prop.solve_complex(lambda)?;
    let sol_t = prop_t.solve_complex(lambda)?;

    // merged cell edges on [0, b]
    let mut edges: Vec<f64> = prop
        .cell_edges()
        .into_iter()
        .chain(prop_t.cell_edges())
        .filter(|&x| x < b)
        .collect();
    edges.push(0.0);
    edges.push(b);
    edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
    edges.dedup_by(|p, q| (*p - *q).abs() < 1e-14);

    let gl = crate::quad::gauss16();
    let mut total = ScaledComplex::zero();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-14 {
            continue;
        }
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let qd = prop_t.qbar_at(mid) - prop.qbar_at(mid);
        if qd == 0.0 {
            continue;
        }
        let mut cell_sum = ScaledComplex::zero();
        for &(xi, wi) in gl {
            let x = mid + half * xi;
            let term = sol
                .y_at(x)
                .mul(&sol_t.y_at(x))
                .mul_complex(Complex64::new(wi * half * qd, 0.0));
            cell_sum = cell_sum.add(&term);
        }
        total = total.add(&cell_sum);
    }
    let dh = ScaledComplex::from_complex(Complex64::new(problem_b_tilde.h - problem_b.h, 0.0));
    total = total.add(&dh);
    let da2 = problem_b.jump.a1 * (problem_b_tilde.jump.a2 - problem_b.jump.a2);
    if da2 != 0.0 {
        let prod_half = sol
            .y_half_minus()
            .mul(&sol_t.y_half_minus())
            .mul_complex(Complex64::new(da2, 0.0));
        total = total.add(&prod_half);
    }
    Ok(total)
}

/// `cos(√u)` as a scaled entire function of `u`.
fn cos_sqrt(u: Complex64) -> ScaledComplex {
    if u.norm() < 1e-6 {
        let c = Complex64::new(1.0, 0.0)
            + u * (-0.5 + u * (Complex64::new(1.0 / 24.0, 0.0) - u / 720.0));
        return ScaledComplex::from_complex(c);
    }
    let z = u.sqrt();
    let (p, q) = (z.re, z.im);
    let aq = q.abs();
    let ch = 0.5 * (1.0 + (-2.0 * aq).exp());
    let sh = 0.5 * q.signum() * (1.0 - (-2.0 * aq).exp());
    ScaledComplex::new(Complex64::new(p.cos() * ch, -p.sin() * sh), aq)
}

/// `sin(√u)/√u` as a scaled entire function of `u`.
fn sinc_sqrt(u: Complex64) -> ScaledComplex {
    if u.norm() < 1e-6 {
        let s = Complex64::new(1.0, 0.0)
            + u * (-1.0 / 6.0 + u * (Complex64::new(1.0 / 120.0, 0.0) - u / 5040.0));
        return ScaledComplex::from_complex(s);
    }
    let z = u.sqrt();
    let (p, q) = (z.re, z.im);
    let aq = q.abs();
    let ch = 0.5 * (1.0 + (-2.0 * aq).exp());
    let sh = 0.5 * q.signum() * (1.0 - (-2.0 * aq).exp());
    let sin_scaled = Complex64::new(p.sin() * ch, p.cos() * sh);
    ScaledComplex::new(sin_scaled / z, aq)
}

/// The comparison function
/// `Φ₀(λ) = σ₁⁻¹ √λ sin(σ₁√λ) [cos(σ₂√λ) + a] = λ S(σ₁²λ)[C(σ₂²λ) + a]`,
/// single-valued and entire in λ. `σ₂ = 0` degenerates the bracket to
/// `1 + a`, matching the empty-S₂ convention.
pub fn phi0(lambda: Complex64, sigma1: f64, sigma2: f64, a: f64) -> Result<ScaledComplex> {
    if !(sigma1 > 0.0) {
        return Err(Error::contract("sigma1 must be positive"));
    }
    if sigma2 < 0.0 {
        return Err(Error::contract("sigma2 must be nonnegative"));
    }
    let s = sinc_sqrt(lambda * sigma1 * sigma1);
    let bracket =
        cos_sqrt(lambda * sigma2 * sigma2).add(&ScaledComplex::from_complex(Complex64::new(a, 0.0)));
    Ok(s.mul(&bracket).mul_complex(lambda))
}

/// `Σ_{n ≥ m} n⁻²`, by recurrence into the asymptotic range.
fn tail_inverse_squares(m: usize) -> f64 {
    let mut x = m as f64;
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    acc + inv + 0.5 * inv * inv + inv.powi(3) / 6.0 - inv.powi(5) / 30.0 + inv.powi(7) / 42.0
}

/// Truncated canonical product with tail correction and error estimate.
#[derive(Debug, Clone)]
pub struct PhiProduct {
    pub value: ScaledComplex,
    /// Estimated relative truncation error (log-space bound).
    pub rel_error: f64,
    pub factors_used: usize,
}

/// `Φ(λ) = Π (1 - λ/κ_{1,n}) (1 - λ/κ_{2,n})`, truncated at `n_factors` per
/// lattice, with a first-order logarithmic tail correction
/// `exp(-λ Σ_{n>N} 1/κ_n)` using the `κ_n ≈ c n²` analytic tail fitted from
/// the last available entry. Zero lattice entries contribute the factor λ
/// itself. The second-order tail and the lattice-fit mismatch are folded
/// into the reported error bar, not the value.
pub fn phi_product(
    kappa1: &[f64],
    kappa2: &[f64],
    lambda: Complex64,
    n_factors: usize,
) -> PhiProduct {
    let mut value = ScaledComplex::one();
    let mut rel_error = 0.0;
    let mut used = 0usize;
    let abs_l = lambda.norm();
    for lattice in [kappa1, kappa2] {
        if lattice.is_empty() {
            continue;
        }
        let n_use = lattice.len().min(n_factors);
        for &kappa in &lattice[..n_use] {
            let factor = if kappa == 0.0 {
                lambda
            } else {
                Complex64::new(1.0, 0.0) - lambda / kappa
            };
            value = value.mul_complex(factor);
        }
        used += n_use;
        // analytic tail beyond the truncation
        if n_use >= 2 {
            let last = lattice[n_use - 1];
            if last > 0.0 {
                let c = last / ((n_use - 1) as f64).powi(2);
                let t1 = tail_inverse_squares(n_use) / c;
                // first-order correction exp(-λ t1)
                let w = -lambda * t1;
                value = value.mul(&ScaledComplex::new(Complex64::new(0.0, w.im).exp(), w.re));
                // second-order tail bound
                let t2 = 1.0 / (c * c) / (3.0 * ((n_use - 1) as f64).powi(3));
                rel_error += 0.5 * abs_l * abs_l * t2;
                // lattice-vs-fit mismatch, probed at the half index
                let mid = n_use / 2;
                if mid >= 1 && lattice[mid] > 0.0 {
                    let mis = (lattice[mid] / (c * (mid as f64).powi(2)) - 1.0).abs();
                    rel_error += abs_l * t1 * mis;
                }
            }
        }
    }
    rel_error += used as f64 * 2.2e-16;
    PhiProduct {
        value,
        rel_error,
        factors_used: used,
    }
}

/// One sample of the imaginary-axis decay probe.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecaySample {
    pub t: f64,
    /// `log10 |E(it)|`; NaN when the sample was skipped.
    pub log10_abs_e: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayProbe {
    pub samples: Vec<DecaySample>,
    /// Least-squares slope of `log10 |E|` against `log10 t`.
    pub slope: f64,
}

/// Sample `|E(it)| = |G(it)| / |Φ(it)|` over the given positive t values and
/// fit the log-log slope. `g_eval` takes λ and returns `G(λ) = g(√λ)`.
pub fn e_decay_probe(
    g_eval: &mut dyn FnMut(Complex64) -> Result<ScaledComplex>,
    phi_eval: &mut dyn FnMut(Complex64) -> ScaledComplex,
    t_samples: &[f64],
) -> Result<DecayProbe> {
    if t_samples.len() < 2 || t_samples.windows(2).any(|w| !(w[0] > 0.0 && w[0] < w[1])) {
        return Err(Error::contract(
            "t samples must be positive, increasing, and at least two",
        ));
    }
    let mut samples = Vec::with_capacity(t_samples.len());
    let mut fit_points = Vec::new();
    for &t in t_samples {
        let lambda = Complex64::new(0.0, t);
        let g = g_eval(lambda)?;
        let phi = phi_eval(lambda);
        if phi.is_zero() || g.is_zero() {
            samples.push(DecaySample {
                t,
                log10_abs_e: f64::NAN,
                skipped: true,
            });
            continue;
        }
        let ln_e = g.abs_ln() - phi.abs_ln();
        let l10 = ln_e / std::f64::consts::LN_10;
        samples.push(DecaySample {
            t,
            log10_abs_e: l10,
            skipped: false,
        });
        fit_points.push((t.log10(), l10));
    }
    if fit_points.len() < 2 {
        return Err(Error::numerical("all decay samples were skipped"));
    }
    let n = fit_points.len() as f64;
    let mx = fit_points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = fit_points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = fit_points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = fit_points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(DecayProbe {
        samples,
        slope: sxy / sxx,
    })
}

/// Zero-count samples at one radius.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZeroCount {
    pub r: f64,
    /// Real-axis zeros in [-r, r], from sign changes (g is even in k).
    pub real_axis: usize,
    /// Total zeros in |k| <= r by phase winding; None when a zero sat too
    /// close to the contour for reliable unwrapping.
    pub winding: Option<i64>,
}

/// Directional growth estimate of an entire function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthEstimate {
    /// `(θ, h_g(θ))` samples: per-direction slope of `ln |g(r e^{iθ})|` in
    /// r, clamped at 0.
    pub h_theta: Vec<(f64, f64)>,
    /// `(1/2π) ∫ h_g(θ) dθ` by trapezoid over the θ grid.
    pub indicator_integral: f64,
    pub zero_counts: Vec<ZeroCount>,
}

impl GrowthEstimate {
    /// `h_g` at the grid point nearest θ.
    pub fn h_at(&self, theta: f64) -> f64 {
        self.h_theta
            .iter()
            .min_by(|a, b| {
                (a.0 - theta)
                    .abs()
                    .partial_cmp(&(b.0 - theta).abs())
                    .unwrap()
            })
            .map(|&(_, h)| h)
            .unwrap_or(f64::NAN)
    }
}

/// Scan growth along rays and count zeros on circles.
///
/// `g_eval` takes k (not λ). Radii must stay within the |Im k| <= 50
/// exponent-accumulation envelope.
pub fn growth_scan(
    g_eval: &mut dyn FnMut(Complex64) -> Result<ScaledComplex>,
    radii: &[f64],
    theta_grid: &[f64],
) -> Result<GrowthEstimate> {
    if radii.len() < 3 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract("radii must be increasing, at least three"));
    }
    if *radii.last().unwrap() > 50.0 + 1e-9 {
        return Err(Error::contract(
            "radii capped at 50 by the exponent-accumulation envelope",
        ));
    }
    if theta_grid.len() < 8 {
        return Err(Error::contract("theta grid needs at least 8 points"));
    }
    let mut h_theta = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        let dir = Complex64::new(theta.cos(), theta.sin());
        let mut pts = Vec::with_capacity(radii.len());
        for &r in radii {
            let v = g_eval(r * dir)?;
            if !v.is_zero() {
                pts.push((r, v.abs_ln()));
            }
        }
        let h = if pts.len() >= 2 {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            (sxy / sxx).max(0.0)
        } else {
            0.0
        };
        h_theta.push((theta, h));
    }
    // periodic trapezoid over θ
    let mut integral = 0.0;
    for i in 0..h_theta.len() {
        let (t0, h0) = h_theta[i];
        let (t1, h1) = if i + 1 < h_theta.len() {
            h_theta[i + 1]
        } else {
            (h_theta[0].0 + 2.0 * std::f64::consts::PI, h_theta[0].1)
        };
        integral += 0.5 * (h0 + h1) * (t1 - t0);
    }
    let indicator_integral = integral / (2.0 * std::f64::consts::PI);

    let mut zero_counts = Vec::with_capacity(radii.len());
    for &r in radii {
        // real-axis sign changes on (0, r], doubled by evenness in k
        let m = 512;
        let mut prev = g_eval(Complex64::new(1e-9, 0.0))?.m.re;
        let mut changes = 0usize;
        for j in 1..=m {
            let k = r * j as f64 / m as f64;
            let v = g_eval(Complex64::new(k, 0.0))?.m.re;
            if prev != 0.0 && v != 0.0 && (prev > 0.0) != (v > 0.0) {
                changes += 1;
            }
            if v != 0.0 {
                prev = v;
            }
        }
        let winding = winding_number(g_eval, r)?;
        zero_counts.push(ZeroCount {
            r,
            real_axis: 2 * changes,
            winding,
        });
    }
    Ok(GrowthEstimate {
        h_theta,
        indicator_integral,
        zero_counts,
    })
}

fn winding_number(
    g_eval: &mut dyn FnMut(Complex64) -> Result<ScaledComplex>,
    r: f64,
) -> Result<Option<i64>> {
    for samples in [4096usize, 16384] {
        let mut total = 0.0;
        let mut prev_arg = f64::NAN;
        let mut ok = true;
        for j in 0..=samples {
            let th = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
            let k = Complex64::new(r * th.cos(), r * th.sin());
            let v = g_eval(k)?;
            if v.is_zero() {
                ok = false;
                break;
            }
            let arg = v.m.arg();
            if j > 0 {
                let mut d = arg - prev_arg;
                while d > std::f64::consts::PI {
                    d -= 2.0 * std::f64::consts::PI;
                }
                while d < -std::f64::consts::PI {
                    d += 2.0 * std::f64::consts::PI;
                }
                if d.abs() > 0.5 * std::f64::consts::PI {
                    ok = false;
                    break;
                }
                total += d;
            }
            prev_arg = arg;
        }
        if ok {
            return Ok(Some((total / (2.0 * std::f64::consts::PI)).round() as i64));
        }
    }
    Ok(None)
}

/// `sup |y ỹ| e^{-2b |Im k|}` over the sample grid: the numerical form of
/// the product growth bound, probed along the imaginary k axis where the
/// exponential factor dominates.
pub fn product_bound_probe(
    problem_b: &ProblemSpec,
    problem_b_tilde: &ProblemSpec,
    b: f64,
    x_samples: &[f64],
    tau_samples: &[f64],
    cfg: &PropagatorConfig,
) -> Result<f64> {
    let prop = Propagator::new(problem_b, cfg)?;
    let prop_t = Propagator::new(problem_b_tilde, cfg)?;
    let mut sup: f64 = 0.0;
    for &tau in tau_samples {
        let k = Complex64::new(0.0, tau);
        let lambda = k * k;
        let sol = prop.solve_complex(lambda)?;
        let sol_t = prop_t.solve_complex(lambda)?;
        for &x in x_samples {
            if x > b {
                continue;
            }
            let ln_prod = sol.y_at(x).mul(&sol_t.y_at(x)).abs_ln();
            let v = (ln_prod - 2.0 * b * tau.abs()).exp();
            sup = sup.max(v);
        }
    }
    Ok(sup)
}

/// `|sin(σ √(it))| e^{-σ |Im √(it)|}`: the sine lower-bound witness along
/// the imaginary axis, in closed form.
pub fn sine_floor_sample(sigma: f64, t: f64) -> f64 {
    let z = Complex64::new(0.0, t).sqrt() * sigma;
    (sinc_sqrt(Complex64::new(0.0, t) * sigma * sigma)
        .mul_complex(z)
        .abs_ln()
        - z.im.abs())
    .exp()
}
