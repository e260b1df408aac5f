//! Small-amplitude shock profiles of quasilinear hyperbolic relaxation systems.
//!
//! The pipeline is: a [`model::ModelSpec`] in normalized block form, structural
//! checks and the reduced (Navier–Stokes type) system in [`structure`], the
//! Chapman–Enskog approximant in [`chapman_enskog`], and a Nash–Moser / Newton
//! correction in [`solver`] built on the linearized solves of [`linear`].
//! [`oracle`] provides independent reference profiles.

pub mod chapman_enskog;
pub mod discretization;
pub mod error;
pub mod io;
pub mod linear;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod structure;

pub use error::{Error, Result};
pub use scalar::Real;

/// Model over `f64`, the scalar used by the CLI and acceptance suite.
pub type ModelSpec64 = model::ModelSpec<f64>;
