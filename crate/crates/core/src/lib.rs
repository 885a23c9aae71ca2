//! Resonant dipole-dipole interaction between two atoms in dispersive and
//! absorbing surroundings: couplings from the classical Green tensor,
//! weak and strong coupling dynamics, transfer rates and emission spectra.

pub mod cli;
pub mod consts;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod green;
pub mod permittivity;
pub mod quadrature;
pub mod rates;
pub mod spectrum;

pub use error::{Error, Result};
