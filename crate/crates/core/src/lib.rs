//! Two-dimensional random interlacements and the random walk conditioned to
//! avoid the origin.
//!
//! The crate is organised bottom-up: [`lattice`] geometry, the potential
//! kernel in [`potential`], absorbing-chain solves in [`solver`], infinite
//! plane hitting quantities in [`harmonic`], walk samplers in [`walks`], the
//! interlacement sampler in [`interlacements`], soft local times in [`slt`]
//! the experiment drivers in [`experiments`] and the acceptance checks in
//! [`verify`].

pub mod error;
pub mod lattice;
pub mod multigrid;
pub mod potential;
pub mod reference;
pub mod rng;
pub mod solver;
pub mod harmonic;
pub mod walks;
pub mod interlacements;
pub mod slt;
pub mod stats;
pub mod experiments;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{ball, Point, PointSet, Torus};
pub use potential::PotentialTable;
