//! Simulation and verification kit for the linear phonon Boltzmann equation
//! with a thermostatted interface at y = 0.
//!
//! The crate computes the interface coefficients (p₊, p₋, 𝔤) and the
//! diffusion constant D from the dispersion relation and the scattering
//! kernel, solves the diffusively rescaled kinetic equation with a
//! finite-volume scheme and with a Monte Carlo particle method, and compares
//! the result against the Dirichlet heat equation ρ(t, 0) = T.

pub mod config;
pub mod corrector;
pub mod dispersion;
pub mod error;
pub mod harness;
pub mod heat;
pub mod interface;
pub mod kinetic;
pub mod quadrature;
pub mod scattering;
pub mod testfn;

pub use corrector::CorrectorSolution;
pub use dispersion::{DispersionModel, WavenumberGrid};
pub use error::{Error, Result};
pub use heat::HeatProfile;
pub use interface::InterfaceCoefficients;
pub use kinetic::{KineticField, SimConfig};
pub use scattering::{DiscreteL, ScatteringKernel};
