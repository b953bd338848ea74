//! Multiparameter rotation metrology with N-photon polarization states: spin
//! algebra, Majorana constellations, quantum Cramér-Rao bounds, spherical Wigner
//! functions, a Fock-space model of a heralded four-photon source and
//! block-diagonal tomography.

pub mod cli;
pub mod constellation;
pub mod error;
pub mod io;
pub mod metrology;
pub mod multipole;
pub mod phase_space;
pub mod source;
pub mod spin;
pub mod tomography;

pub use error::{Error, Result};
