//! Piecewise-polynomial potentials on [0,1].
//!
//! A [`Potential`] is an ordered list of sub-intervals, each carrying cubic
//! polynomial coefficients in the local coordinate `s = x - x0`. The pieces
//! partition [0,1] exactly and `x = 1/2` is always a piece boundary, so the
//! transmission jump is applied at an exact cell edge and integrals never
//! cross the discontinuity.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One polynomial piece: `q(x) = c0 + c1 s + c2 s^2 + c3 s^3` with `s = x - interval[0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub interval: [f64; 2],
    pub coeffs: [f64; 4],
}

impl Piece {
    pub fn len(&self) -> f64 {
        self.interval[1] - self.interval[0]
    }

    /// Value at global coordinate `x` (Horner in the local coordinate).
    pub fn eval(&self, x: f64) -> f64 {
        let s = x - self.interval[0];
        let [c0, c1, c2, c3] = self.coeffs;
        c0 + s * (c1 + s * (c2 + s * c3))
    }

    /// Exact antiderivative difference over `[a, b]` in global coordinates.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = |x: f64| {
            let s = x - self.interval[0];
            let [c0, c1, c2, c3] = self.coeffs;
            s * (c0 + s * (c1 / 2.0 + s * (c2 / 3.0 + s * c3 / 4.0)))
        };
        anti(b) - anti(a)
    }

    /// Coefficients of the same polynomial re-expressed around a new left
    /// endpoint `x0_new >= interval[0]` (binomial shift).
    fn shifted_coeffs(&self, x0_new: f64) -> [f64; 4] {
        let d = x0_new - self.interval[0];
        let [c0, c1, c2, c3] = self.coeffs;
        [
            c0 + d * (c1 + d * (c2 + d * c3)),
            c1 + d * (2.0 * c2 + 3.0 * d * c3),
            c2 + 3.0 * d * c3,
            c3,
        ]
    }

    /// Crude upper bound for `|q|` on the piece.
    fn sup_bound(&self) -> f64 {
        let h = self.len();
        let [c0, c1, c2, c3] = self.coeffs;
        c0.abs() + c1.abs() * h + c2.abs() * h * h + c3.abs() * h * h * h
    }
}

/// Piecewise-cubic potential on [0,1] with a mandatory breakpoint at 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Piece>", into = "Vec<Piece>")]
pub struct Potential {
    pieces: Vec<Piece>,
}

impl TryFrom<Vec<Piece>> for Potential {
    type Error = Error;
    fn try_from(pieces: Vec<Piece>) -> Result<Self> {
        Potential::new(pieces)
    }
}

impl From<Potential> for Vec<Piece> {
    fn from(q: Potential) -> Self {
        q.pieces
    }
}

const PARTITION_TOL: f64 = 1e-12;

impl Potential {
    /// Build a potential from pieces. The pieces must partition [0,1] exactly
    /// (adjacent endpoints equal, no overlap or gap). A piece straddling 1/2
    /// is split there automatically, with coefficients shifted exactly.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::contract("potential needs at least one piece"));
        }
        for p in &pieces {
            if !(p.interval[0].is_finite() && p.interval[1].is_finite()) || p.len() <= 0.0 {
                return Err(Error::contract(format!(
                    "piece interval [{}, {}] is not a proper sub-interval",
                    p.interval[0], p.interval[1]
                )));
            }
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::contract("non-finite polynomial coefficient"));
            }
        }
        if (pieces[0].interval[0]).abs() > PARTITION_TOL {
            return Err(Error::contract("pieces must start at 0"));
        }
        if (pieces.last().unwrap().interval[1] - 1.0).abs() > PARTITION_TOL {
            return Err(Error::contract("pieces must end at 1"));
        }
        for w in pieces.windows(2) {
            if (w[0].interval[1] - w[1].interval[0]).abs() > PARTITION_TOL {
                return Err(Error::contract(format!(
                    "gap or overlap between pieces at x = {}",
                    w[0].interval[1]
                )));
            }
        }
        // Snap shared endpoints so adjacency is exact, then split at 1/2.
        let mut snapped = pieces;
        snapped[0].interval[0] = 0.0;
        for i in 1..snapped.len() {
            let left_end = snapped[i - 1].interval[1];
            snapped[i].interval[0] = left_end;
        }
        snapped.last_mut().unwrap().interval[1] = 1.0;

        let mut out = Vec::with_capacity(snapped.len() + 1);
        for p in snapped {
            if p.interval[0] < 0.5 && p.interval[1] > 0.5 && (p.interval[0] - 0.5).abs() > 0.0 {
                let right = Piece {
                    interval: [0.5, p.interval[1]],
                    coeffs: p.shifted_coeffs(0.5),
                };
                let left = Piece {
                    interval: [p.interval[0], 0.5],
                    coeffs: p.coeffs,
                };
                out.push(left);
                out.push(right);
            } else {
                out.push(p);
            }
        }
        Ok(Potential { pieces: out })
    }

    /// The zero potential.
    pub fn zero() -> Self {
        Potential::constant(0.0)
    }

    /// A constant potential `q ≡ c`.
    pub fn constant(c: f64) -> Self {
        Potential::new(vec![Piece {
            interval: [0.0, 1.0],
            coeffs: [c, 0.0, 0.0, 0.0],
        }])
        .expect("constant piece is a valid partition")
    }

    /// Piecewise-cubic interpolant of `f` on `n_pieces` uniform pieces
    /// (4-point Newton interpolation per piece, nodes at s/h ∈ {0, 1/3, 2/3, 1}).
    pub fn interpolated(f: impl Fn(f64) -> f64, n_pieces: usize) -> Result<Self> {
        if n_pieces == 0 {
            return Err(Error::contract("need at least one piece"));
        }
        let n = n_pieces.max(1);
        let h = 1.0 / n as f64;
        let mut pieces = Vec::with_capacity(n);
        for i in 0..n {
            let x0 = i as f64 * h;
            let x1 = (i + 1) as f64 * h;
            let xs = [x0, x0 + h / 3.0, x0 + 2.0 * h / 3.0, x1];
            let ys = [f(xs[0]), f(xs[1]), f(xs[2]), f(xs[3])];
            pieces.push(Piece {
                interval: [x0, x1],
                coeffs: newton_cubic(&xs, &ys, x0),
            });
        }
        Potential::new(pieces)
    }

    /// Piecewise-constant potential over the given cell values on `[0, b]`,
    /// extended by `tail` on `[b, 1]`. Used as the inversion basis.
    pub fn piecewise_on_head(cell_values: &[f64], b: f64, tail: &Potential) -> Result<Self> {
        if !(0.0 < b && b <= 1.0) {
            return Err(Error::domain(format!("b = {b} outside (0, 1]")));
        }
        if cell_values.is_empty() && b < 1.0 {
            return Potential::new(tail.clip_to(b, 1.0, true)?);
        }
        let m = cell_values.len();
        let h = b / m as f64;
        let mut pieces = Vec::new();
        for (i, &v) in cell_values.iter().enumerate() {
            pieces.push(Piece {
                interval: [i as f64 * h, (i + 1) as f64 * h],
                coeffs: [v, 0.0, 0.0, 0.0],
            });
        }
        if b < 1.0 {
            pieces.extend(tail.clip_to(b, 1.0, false)?);
        }
        Potential::new(pieces)
    }

    /// Pieces of `self` restricted to `[a, c]`, re-shifted exactly.
    fn clip_to(&self, a: f64, c: f64, pad_left: bool) -> Result<Vec<Piece>> {
        let mut out = Vec::new();
        if pad_left && a > 0.0 {
            out.push(Piece {
                interval: [0.0, a],
                coeffs: [0.0; 4],
            });
        }
        for p in &self.pieces {
            let lo = p.interval[0].max(a);
            let hi = p.interval[1].min(c);
            if hi - lo > PARTITION_TOL {
                out.push(Piece {
                    interval: [lo, hi],
                    coeffs: p.shifted_coeffs(lo),
                });
            }
        }
        if out.is_empty() {
            return Err(Error::domain("empty restriction"));
        }
        Ok(out)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Sorted piece boundaries, including 0, 1/2 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().map(|p| p.interval[0]).collect();
        b.push(1.0);
        b
    }

    fn piece_at(&self, x: f64) -> &Piece {
        // At an interior breakpoint the left piece wins by convention.
        let idx = self.pieces.partition_point(|p| p.interval[1] < x);
        &self.pieces[idx.min(self.pieces.len() - 1)]
    }

    /// Evaluate `q(x)`. At an interior breakpoint the left piece's value is
    /// returned.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(self.piece_at(x).eval(x))
    }

    /// Exact integral of `q` over `[x0, x1]` (piecewise antiderivative, no
    /// quadrature error beyond rounding).
    pub fn integrate(&self, x0: f64, x1: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x0) || !(0.0..=1.0).contains(&x1) || x0 > x1 {
            return Err(Error::domain(format!(
                "integration bounds [{x0}, {x1}] invalid"
            )));
        }
        let mut total = 0.0;
        for p in &self.pieces {
            let lo = p.interval[0].max(x0);
            let hi = p.interval[1].min(x1);
            if hi > lo {
                total += p.integral(lo, hi);
            }
        }
        Ok(total)
    }

    /// Upper bound for `sup |q|` on [0,1].
    pub fn sup_bound(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.sup_bound())
            .fold(0.0, f64::max)
    }

    /// L2 norm of `self - other` over `[a, c]`, by Gauss quadrature on the
    /// merged piece grid.
    pub fn l2_distance_on(&self, other: &Potential, a: f64, c: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&c) || a >= c {
            return Err(Error::domain("bad interval for L2 distance"));
        }
        let mut cuts: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .chain(other.breakpoints())
            .filter(|&x| x > a && x < c)
            .collect();
        cuts.push(a);
        cuts.push(c);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        cuts.dedup_by(|p, q| (*p - *q).abs() < PARTITION_TOL);
        let gl = crate::quad::gauss16();
        let mut sum = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(xi, wi) in gl {
                let x = mid + half * xi;
                let d = self.eval(x)? - other.eval(x)?;
                sum += wi * half * d * d;
            }
        }
        Ok(sum.max(0.0).sqrt())
    }
}

/// Monomial coefficients (around `x0`) of the cubic through `(xs[i], ys[i])`.
fn newton_cubic(xs: &[f64; 4], ys: &[f64; 4], x0: f64) -> [f64; 4] {
    // Divided differences.
    let mut d = *ys;
    for j in 1..4 {
        for i in (j..4).rev() {
            d[i] = (d[i] - d[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    // Expand Newton form around x0: product terms (s - t_k) with t_k = xs[k] - x0.
    let t: Vec<f64> = xs.iter().map(|x| x - x0).collect();
    let mut c = [d[3], 0.0, 0.0, 0.0]; // start with highest coefficient
    for k in (0..3).rev() {
        // c(s) = c(s) * (s - t[k]) + d[k]
        let mut nc = [0.0; 4];
        for i in (0..3).rev() {
            nc[i + 1] += c[i];
        }
        for i in 0..4 {
            nc[i] -= t[k] * c[i];
        }
        nc[0] += d[k];
        c = nc;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_zero_and_constant() {
        let q0 = Potential::zero();
        assert_eq!(q0.eval(0.3).unwrap(), 0.0);
        let q1 = Potential::constant(1.0);
        assert_eq!(q1.eval(0.75).unwrap(), 1.0);
    }

    #[test]
    fn eval_linear() {
        let q = Potential::new(vec![Piece {
            interval: [0.0, 1.0],
            coeffs: [0.0, 2.0, 0.0, 0.0],
        }])
        .unwrap();
        assert_abs_diff_eq!(q.eval(0.25).unwrap(), 0.5, epsilon = 1e-15);
        // auto-split at 1/2 keeps values exact on the right half too
        assert_abs_diff_eq!(q.eval(0.75).unwrap(), 1.5, epsilon = 1e-15);
        assert!(q.breakpoints().contains(&0.5));
    }

    #[test]
    fn eval_out_of_range() {
        let q = Potential::zero();
        assert!(q.eval(-0.1).is_err());
        assert!(q.eval(1.1).is_err());
    }

    #[test]
    fn integrate_examples() {
        let q1 = Potential::constant(1.0);
        assert_abs_diff_eq!(q1.integrate(0.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let q0 = Potential::zero();
        assert_eq!(q0.integrate(0.2, 0.9).unwrap(), 0.0);
        let q = Potential::new(vec![Piece {
            interval: [0.0, 1.0],
            coeffs: [0.0, 2.0, 0.0, 0.0],
        }])
        .unwrap();
        assert_abs_diff_eq!(q.integrate(0.5, 1.0).unwrap(), 0.75, epsilon = 1e-14);
        assert!(q.integrate(0.9, 0.2).is_err());
    }

    #[test]
    fn integrate_additive() {
        let q = Potential::interpolated(|x| (2.0 * std::f64::consts::PI * x).cos(), 16).unwrap();
        let (a, b, c) = (0.1, 0.37, 0.93);
        let whole = q.integrate(a, c).unwrap();
        let split = q.integrate(a, b).unwrap() + q.integrate(b, c).unwrap();
        assert_abs_diff_eq!(whole, split, epsilon = 1e-14 * (1.0 + whole.abs()));
    }

    #[test]
    fn partition_sums_to_one() {
        let q = Potential::interpolated(|x| x * x, 7).unwrap();
        let total: f64 = q.pieces().iter().map(|p| p.len()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let bp = q.breakpoints();
        assert!(bp.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_gap_and_overlap() {
        let gap = vec![
            Piece {
                interval: [0.0, 0.4],
                coeffs: [0.0; 4],
            },
            Piece {
                interval: [0.5, 1.0],
                coeffs: [0.0; 4],
            },
        ];
        assert!(Potential::new(gap).is_err());
        let short = vec![Piece {
            interval: [0.0, 0.9],
            coeffs: [0.0; 4],
        }];
        assert!(Potential::new(short).is_err());
    }

    #[test]
    fn interpolated_matches_smooth_function() {
        let f = |x: f64| 1.0 + (2.0 * std::f64::consts::PI * x).cos();
        let q = Potential::interpolated(f, 64).unwrap();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert_abs_diff_eq!(q.eval(x).unwrap(), f(x), epsilon = 1e-7);
        }
        // integral of cos over the whole period vanishes
        assert_abs_diff_eq!(q.integrate(0.0, 1.0).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn serde_round_trip() {
        let q = Potential::interpolated(|x| x.powi(3) - 0.2, 5).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        let q2: Potential = serde_json::from_str(&s).unwrap();
        assert_eq!(q, q2);
    }
}
