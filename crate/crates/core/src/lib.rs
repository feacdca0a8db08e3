//! Spectral-gap bounds for Hamiltonians with a prescribed coupling topology.
//!
//! The crate builds Hamiltonians as sums of local terms, diagonalizes them
//! exactly, and evaluates inequalities relating the low-lying spectrum to
//! the overlap of a reference state with the ground space and to the set of
//! states sharing that reference state's marginals.

pub mod bounds;
pub mod error;
pub mod extremal;
pub mod hamiltonian;
mod json;
pub mod linalg;
pub mod qecc;
pub mod qstate;
pub mod sweep;
pub mod topology;

pub use error::{Error, Result};
