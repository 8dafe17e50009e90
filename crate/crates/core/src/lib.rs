//! Finite-element simulator for the Cahn-Hilliard-Biot system.
//!
//! The crate is `no_std` (it only needs `alloc`) and contains the whole
//! numerical core: structured triangulations of the unit square, P1 spaces,
//! sparse linear algebra, the constitutive laws, assembly, the decoupled
//! structure-preserving time integrator together with a monolithic reference
//! solver, and the energy/mass balance diagnostics.
//!
//! File formats, configuration and the command line live in the companion
//! `chb` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assembly;
pub mod diagnostics;
mod error;
pub mod fespace;
pub mod material;
mod math;
pub mod mesh;
pub mod scheme;
pub mod sparse;

pub use error::{Error, Result};
