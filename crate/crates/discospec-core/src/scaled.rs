//! Log-scaled complex arithmetic.
//!
//! Probes along the imaginary axis drive solution magnitudes to `exp(±700)`
//! and beyond, so intermediate values are carried as `m · exp(log)` with the
//! mantissa kept near unit magnitude.

use num_complex::Complex64;

/// A complex number `m * exp(log)` with `|m|` kept in a moderate range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub m: Complex64,
    pub log: f64,
}

const RENORM_HI: f64 = 1e18;
const RENORM_LO: f64 = 1e-18;

impl ScaledComplex {
    pub fn zero() -> Self {
        ScaledComplex {
            m: Complex64::new(0.0, 0.0),
            log: 0.0,
        }
    }

    pub fn one() -> Self {
        ScaledComplex {
            m: Complex64::new(1.0, 0.0),
            log: 0.0,
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        ScaledComplex { m: z, log: 0.0 }.renormed()
    }

    pub fn new(m: Complex64, log: f64) -> Self {
        ScaledComplex { m, log }.renormed()
    }

    pub fn is_zero(&self) -> bool {
        self.m.norm_sqr() == 0.0
    }

    /// Pull the magnitude of `m` back toward 1, moving scale into `log`.
    pub fn renormed(mut self) -> Self {
        let n = self.m.norm();
        if n == 0.0 {
            self.log = 0.0;
            return self;
        }
        if n > RENORM_HI || n < RENORM_LO {
            self.m /= n;
            self.log += n.ln();
        }
        self
    }

    /// `ln |value|`; `-inf` for zero.
    pub fn abs_ln(&self) -> f64 {
        let n = self.m.norm();
        if n == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.log + n.ln()
        }
    }

    /// The plain complex value. Overflows to infinity if `log` is too large.
    pub fn to_complex(&self) -> Complex64 {
        self.m * self.log.exp()
    }

    pub fn mul(&self, other: &ScaledComplex) -> ScaledComplex {
        ScaledComplex {
            m: self.m * other.m,
            log: self.log + other.log,
        }
        .renormed()
    }

    pub fn mul_complex(&self, z: Complex64) -> ScaledComplex {
        ScaledComplex {
            m: self.m * z,
            log: self.log,
        }
        .renormed()
    }

    pub fn div(&self, other: &ScaledComplex) -> ScaledComplex {
        ScaledComplex {
            m: self.m / other.m,
            log: self.log - other.log,
        }
        .renormed()
    }

    /// Sum, aligning scales at the larger exponent.
    pub fn add(&self, other: &ScaledComplex) -> ScaledComplex {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (hi, lo) = if self.log >= other.log {
            (self, other)
        } else {
            (other, self)
        };
        let shift = (lo.log - hi.log).exp(); // <= 1
        ScaledComplex {
            m: hi.m + lo.m * shift,
            log: hi.log,
        }
        .renormed()
    }

    pub fn neg(&self) -> ScaledComplex {
        ScaledComplex {
            m: -self.m,
            log: self.log,
        }
    }
}
