//! Low-depth quantum state preparation.
//!
//! Targets are compiled into layered circuits that prepare a small state on
//! the leading qubits and then load the remaining qubits conditioned on it.
//! Circuits carry explicit qubit lifetimes, so depth, size and spacetime
//! allocation can be read off exactly, and a sparse simulator checks that
//! every ancilla returns to its initial state.

pub mod amplitudes;
pub mod circuit;
pub mod config;
pub mod multicopy;
pub mod protocols;
pub mod sim;
pub mod subroutines;
