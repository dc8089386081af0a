//! Polarization exchange between two photon beams coupled through an atomic
//! gas.
//!
//! The effective interaction is studied at three levels:
//!
//! * [`meanfield`]: closed equations for the per-beam polarization vectors;
//! * [`quantum`]: exact evolution in the product of the two beams'
//!   permutation-symmetric (Dicke) spaces, with entanglement diagnostics;
//! * [`pulse`]: mean-field transport of the polarizations along the beam
//!   axis for beams injected at one end of the interaction region.
//!
//! [`spinspace`] holds the collective operator algebra and a brute-force
//! reference on the full photon register, [`coupling`] the physical coupling
//! constants and Hamiltonian builders.

pub mod coupling;
pub mod error;
pub mod meanfield;
pub mod pulse;
pub mod quantum;
pub mod sparse;
pub mod spinspace;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
