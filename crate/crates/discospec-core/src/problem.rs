//! Boundary-value problem description and spectra.
//!
//! A [`ProblemSpec`] bundles the potential `q`, the left Robin coefficient
//! `h`, the right boundary condition (Robin with coefficient `H`, or
//! Dirichlet), and the transmission jump `(a1, a2)` applied at `x = 1/2`:
//!
//! ```text
//! -y'' + q y = λ y          on (0, 1)
//! y'(0) - h y(0) = 0
//! y'(1) + H y(1) = 0        (Robin)   or   y(1) = 0   (Dirichlet)
//! y(1/2+) = a1 y(1/2-),     y'(1/2+) = a1⁻¹ y'(1/2-) + a2 y(1/2-)
//! ```

use crate::error::{Error, Result};
use crate::potential::Potential;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Right-end boundary condition.
///
/// Serialized as `{"robin": H}` or `"dirichlet"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Robin(f64),
    Dirichlet,
}

impl BoundaryCondition {
    pub fn robin_coefficient(&self) -> Option<f64> {
        match self {
            BoundaryCondition::Robin(h) => Some(*h),
            BoundaryCondition::Dirichlet => None,
        }
    }
}

/// Transmission condition at `x = 1/2`: the state `(y, y')` is multiplied by
/// the unimodular matrix `[[a1, 0], [a2, 1/a1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub a1: f64,
    pub a2: f64,
}

impl Transmission {
    pub fn identity() -> Self {
        Transmission { a1: 1.0, a2: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a1.is_finite() && self.a2.is_finite()) {
            return Err(Error::contract("transmission coefficients must be finite"));
        }
        if self.a1 <= 0.0 {
            return Err(Error::contract(format!("a1 = {} must be positive", self.a1)));
        }
        // determinant of [[a1,0],[a2,1/a1]] is a1 * (1/a1)
        let det = self.a1 * (1.0 / self.a1);
        if (det - 1.0).abs() > 1e-15 {
            return Err(Error::contract("jump matrix determinant differs from 1"));
        }
        Ok(())
    }
}

/// Spectrum family: Robin-right problems (`B`, `B_i`) have leading lattice
/// `nπ`; the Dirichlet-right problem (`B∞`) has lattice
/// `γ_n = (n + 1/2)π + (-1)^n asin(a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Robin,
    Dirichlet,
}

/// Full boundary-value problem. This is `B(q, h, H, a1, a2)` when `right`
/// is Robin, and `B∞` when `right` is Dirichlet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub q: Potential,
    pub h: f64,
    pub right: BoundaryCondition,
    #[serde(flatten)]
    pub jump: Transmission,
}

impl ProblemSpec {
    pub fn new(q: Potential, h: f64, right: BoundaryCondition, jump: Transmission) -> Result<Self> {
        let p = ProblemSpec { q, h, right, jump };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.h.is_finite() {
            return Err(Error::contract("h must be finite"));
        }
        if let BoundaryCondition::Robin(big_h) = self.right {
            if !big_h.is_finite() {
                return Err(Error::contract("Robin coefficient H must be finite"));
            }
        }
        self.jump.validate()
    }

    pub fn family(&self) -> Family {
        match self.right {
            BoundaryCondition::Robin(_) => Family::Robin,
            BoundaryCondition::Dirichlet => Family::Dirichlet,
        }
    }

    /// Same problem with the right end replaced.
    pub fn with_right(&self, right: BoundaryCondition) -> ProblemSpec {
        ProblemSpec {
            right,
            ..self.clone()
        }
    }

    /// Stable identifier derived from the canonical JSON serialization.
    pub fn id(&self) -> String {
        let json = serde_json::to_string(self).expect("ProblemSpec serializes");
        format!("{:016x}", fnv1a(json.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Solution value and derivative at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub y: Complex64,
    pub dy: Complex64,
    pub x: f64,
}

/// One computed eigenvalue with the characteristic-function residual left by
/// the root refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenEntry {
    pub n: u32,
    pub lambda: f64,
    pub residual_abs: f64,
}

/// Indexed eigenvalue sequence of one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Identifier of the generating [`ProblemSpec`].
    pub problem_id: String,
    pub family: Family,
    /// Jump asymmetry constant `a = (a1 - a1⁻¹)/(a1 + a1⁻¹)`, kept with the
    /// spectrum so the comparison lattice `γ_n` is reconstructible.
    pub a: f64,
    pub values: Vec<EigenEntry>,
}

impl Spectrum {
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.values.iter().enumerate() {
            if e.n as usize != i {
                return Err(Error::contract(format!(
                    "spectrum indices must be contiguous from 0; found {} at position {i}",
                    e.n
                )));
            }
        }
        if self
            .values
            .windows(2)
            .any(|w| !(w[0].lambda < w[1].lambda))
        {
            return Err(Error::contract("eigenvalues must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.values.iter().map(|e| e.lambda).collect()
    }

    pub fn eigenvalue(&self, n: usize) -> Option<f64> {
        self.values.get(n).map(|e| e.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_problem() -> ProblemSpec {
        ProblemSpec::new(
            Potential::constant(1.0),
            0.3,
            BoundaryCondition::Robin(-0.2),
            Transmission { a1: 2.0, a2: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn json_contract_shape() {
        let p = sample_problem();
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        // flat a1/a2 keys, right as {"robin": H}
        assert!(v.get("a1").is_some());
        assert!(v.get("a2").is_some());
        assert_eq!(v["h"], serde_json::json!(0.3));
        assert_eq!(v["right"]["robin"], serde_json::json!(-0.2));
        assert!(v["q"].is_array());

        let dir = p.with_right(BoundaryCondition::Dirichlet);
        let vd: serde_json::Value = serde_json::to_value(&dir).unwrap();
        assert_eq!(vd["right"], serde_json::json!("dirichlet"));
    }

    #[test]
    fn round_trip_is_equal() {
        let p = sample_problem();
        let s = serde_json::to_string_pretty(&p).unwrap();
        let p2: ProblemSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(p, p2);
        assert_eq!(p.id(), p2.id());
    }

    #[test]
    fn rejects_nonpositive_a1() {
        let r = ProblemSpec::new(
            Potential::zero(),
            0.0,
            BoundaryCondition::Dirichlet,
            Transmission { a1: -2.0, a2: 0.0 },
        );
        assert!(r.is_err());
    }

    #[test]
    fn spectrum_invariants() {
        let good = Spectrum {
            problem_id: "x".into(),
            family: Family::Robin,
            a: 0.0,
            values: vec![
                EigenEntry { n: 0, lambda: 0.0, residual_abs: 0.0 },
                EigenEntry { n: 1, lambda: 9.8696, residual_abs: 0.0 },
            ],
        };
        assert!(good.validate().is_ok());
        let mut bad = good.clone();
        bad.values[1].lambda = -1.0;
        assert!(bad.validate().is_err());
        let mut bad_idx = good;
        bad_idx.values[1].n = 3;
        assert!(bad_idx.validate().is_err());
    }
}
