//! Exciton energy-transfer simulation and superconducting-circuit parameter
//! compilation.
//!
//! Energies are cm⁻¹, times ps and rates ps⁻¹ internally. Conversions to
//! laboratory units go through [`units`].

pub mod chain;
pub mod circuit;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exciton;
pub mod linalg;
pub mod optim;
mod par;
pub mod quad;
pub mod runner;
pub mod spectral;
pub mod units;

pub use error::{Error, Result};
pub use par::set_threads;
