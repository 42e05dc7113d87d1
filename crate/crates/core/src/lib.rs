//! Quantization of lumped superconducting circuits: netlists to Hamiltonians,
//! spectra, linear-network synthesis, open-system dynamics and perturbative
//! effective models.
//!
//! Unit conventions used throughout: capacitance in fF, inductance in nH,
//! energies and frequencies as E/h in GHz, external flux in units of the flux
//! quantum, charge in units of 2e, time in ns. The `network` module works in
//! SI (rad/s, ohm, siemens, farad) because that is how impedance data arrives.

pub mod builder;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod netlist;
pub mod network;
pub mod perturb;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
