//! Design and verification of microwave pulse sequences that drive the two
//! enantiomers of a chiral molecule into different rotational states.
//!
//! The crate is split the same way the physics is:
//!
//! * [`model`] holds the level structure and coupling Hamiltonians,
//! * [`pulses`] evaluates Gaussian carrier pulses in time and frequency,
//! * [`areas`] turns pulses into complex pulse areas and designs pulses that
//!   meet the amplitude and phase conditions,
//! * [`analytic`] evaluates the closed-form first-order Magnus wavefunctions,
//! * [`propagator`] integrates the full interaction-picture dynamics,
//! * [`experiments`] runs the parameter sweeps on top of both engines.
//!
//! Units: time in ns, angular frequency and couplings in rad/ns, dipoles in
//! Debye, user-facing frequencies in cyclic MHz, and ħ = 1.

pub mod analytic;
pub mod areas;
pub mod error;
pub mod experiments;
pub mod model;
pub mod propagator;
pub mod pulses;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64;
