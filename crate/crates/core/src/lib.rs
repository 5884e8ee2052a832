//! State-vector simulation of quantum imaginary time evolution (QITE) for
//! unit-disk maximum independent set.
//!
//! Basis index convention: qubit 0 is the most significant bit, so the
//! bitstring `b0 b1 ... b(N-1)` read left to right is the binary index.

pub mod analysis;
pub mod error;
pub mod graph;
pub mod hamiltonian;
pub mod ite;
mod linalg;
pub mod pauli;
pub mod qite;
pub mod runner;
pub mod sampler;
pub mod seed;
pub mod state;

pub use error::{Error, Result};
