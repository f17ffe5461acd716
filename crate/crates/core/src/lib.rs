//! Signatures of spectral localizers for finite-volume lattice Hamiltonians.
//!
//! The crate builds tight-binding models on finite lattices, assembles the
//! odd and even spectral localizers with a position-space Dirac operator, and
//! reads integer (or trace-per-volume) index pairings off half the signature
//! of the reduced localizer. Signatures are computed either by counting
//! eigenvalues or from a Bunch–Kaufman `LDLᴴ` factorization, and every
//! localizer result can be compared against momentum-space oracles.
//!
//! Everything here is `no_std` with `alloc`; file formats, configuration and
//! the command line live in the `sigloc` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dirac;
pub mod error;
pub mod flow;
pub mod inertia;
pub mod invariants;
pub mod lattice;
pub mod linalg;
pub mod localizer;
pub mod models;
pub mod oracles;
pub mod sparse;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
