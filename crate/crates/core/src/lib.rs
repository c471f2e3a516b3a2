//! Alternative multipole expansion of the electron-electron Coulomb term,
//! the modified spherical-Bessel-type radial functions it produces, and a
//! helium-like pseudopotential solved in a B-spline Galerkin basis.
//!
//! Module map:
//!
//! - [`specfun`]: double factorials, Legendre polynomials, β coefficients and
//!   the modified spherical-Bessel-type functions j̃_l.
//! - [`expansion`]: every evaluation route for 1/|r₁ − r₂| plus error scans.
//! - [`radial`]: B-spline knots, Galerkin assembly and the generalized
//!   symmetric-definite eigensolver.
//! - [`helium`]: the pseudopotential model, correction levels H₀–H₅ and the
//!   energy tables.
//! - [`cli`]: argument parsing and command execution for the `multipole` binary.

pub mod cli;
pub mod error;
pub mod expansion;
pub mod helium;
pub mod quadrature;
pub mod radial;
pub mod specfun;

pub use error::{Error, Result};
