//! Quasiperiodic spin chains from substitution tilings: coupling generation,
//! free-fermion and exact-diagonalization solvers, entanglement analysis.

pub mod analysis;
pub mod couplings;
pub mod error;
pub mod gaussian;
pub mod interacting;
pub mod substitution;

pub use error::{Error, Result};
