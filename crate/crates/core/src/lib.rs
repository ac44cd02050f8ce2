//! Exact diagonalization of Heisenberg spin rings and chains, and energy
//! thresholds that certify multipartite entanglement.

pub mod basis;
pub mod cli;
pub mod eigensolver;
pub mod error;
pub mod hamiltonian;
pub mod operator;
pub mod scf;
pub mod spin;
pub mod state;
pub mod witness;

pub use error::{Error, Result};
pub use spin::SpinLength;
