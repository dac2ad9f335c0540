//! discospec-core: forward and inverse spectral computations for the
//! Sturm-Liouville operator on [0, 1] with a transmission discontinuity at
//! x = 1/2.
//!
//! The crate is organized around the problem pipeline:
//!
//! * [`potential`] / [`problem`] — domain types: piecewise-cubic potentials,
//!   boundary conditions, the transmission jump, problem specs, spectra.
//! * [`forward`] — frozen-coefficient propagation, characteristic functions,
//!   phase-count-verified eigenvalue computation, Wronskian probes.
//! * [`asymptotics`] — the constants (a, ω, ω₀, ω₁), two-term eigenvalue
//!   predictions, residual diagnostics.
//! * [`spectral_data`] — counting functions, subset selection, and the
//!   density/summability sufficiency checks for mixed spectral data.
//! * [`entire_probe`] — numerical probes of the entire-function machinery:
//!   g(k) in integral form, canonical products, decay and growth scans.
//! * [`inverse`] — regularized Gauss-Newton reconstruction from partial
//!   spectra and multi-start uniqueness experiments.

pub mod asymptotics;
pub mod entire_probe;
pub mod error;
pub mod forward;
pub mod inverse;
pub mod potential;
pub mod problem;
pub mod quad;
pub mod scaled;
pub mod spectral_data;

pub use error::{Error, Result};
pub use potential::{Piece, Potential};
pub use problem::{
    BoundaryCondition, EigenEntry, Family, ProblemSpec, Spectrum, StateVector, Transmission,
};
