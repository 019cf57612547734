//! Maslov indices, spectral flows and dihedral decompositions of Morse indices
//! for linear Hamiltonian and Lagrangian systems.
//!
//! The crate is generic over the real scalar through [`Real`] (implemented
//! for `f32` and `f64`); the aliases at the bottom of this file fix `f64`,
//! which is what every acceptance computation uses. The three-body module is
//! `f64` only.

pub mod dihedral;
pub mod error;
pub mod galerkin;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod maslov;
pub mod random;
pub mod scalar;
pub mod spectral;
pub mod stability;
pub mod threebody;
pub mod tolerances;

pub use error::{Error, Result};
pub use scalar::{Real, C};
pub use tolerances::Tolerances;

pub type SymplecticSpace = linalg::SymplecticSpace<f64>;
pub type LagrangianFrame = linalg::LagrangianFrame<f64>;
