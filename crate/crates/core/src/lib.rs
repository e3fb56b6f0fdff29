//! Pseudo-spectral toolkit for the rotating, stratified primitive equations
//! on anisotropic 3-tori.
//!
//! The crate covers the penalized linear operator and its exact propagator,
//! the quasi-geostrophic/oscillating split, resonance enumeration, the limit
//! system and its solvers, and run diagnostics.

pub mod diagnostics;
pub mod dyadic;
pub mod error;
pub mod exact;
pub mod field;
pub mod lattice;
pub mod limit;
pub mod linear;
pub mod resonance;
pub mod snapshot;
pub mod solvers;
pub mod transform;

pub use error::{Error, Result};
pub use field::{make_field, ScalarField, SpectralField4, Vec4};
pub use lattice::{ExactCarriers, FreqLattice, Mode, TorusSpec};
pub use linear::{build_mode_basis, potential_vorticity, LinearTables, ModeBasis};
