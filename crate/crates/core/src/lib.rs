//! Numerical verification of sharp spectral gaps for the clamped, buckling
//! and membrane problems, and of Rellich-type inequalities, on the model
//! spaces of constant curvature −κ².
//!
//! The crate is organised bottom-up:
//!
//! * [`modelspace`] radial geometry and radial calculus,
//! * [`quadrature`] weighted one-dimensional integration and `L^p` functionals,
//! * [`specialfn`] Bessel functions and their first zeros,
//! * [`riccati`] the Riccati-type side conditions and their parameter families,
//! * [`sharpness`] truncated exponential test functions and limit sweeps,
//! * [`eigensolve`] radial finite-element eigensolvers and Rellich quotients,
//! * [`report`] CSV/JSON reports,
//! * [`acceptance`] the end-to-end validation suite.

pub mod acceptance;
pub mod eigensolve;
pub mod error;
pub mod modelspace;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod riccati;
pub mod sharpness;
pub mod specialfn;

pub use error::{GapError, Result};
pub use modelspace::{ModelSpace, RadialProfile};
