//! Sparse statevector simulation with dynamic qubit allocation, plus
//! independent reference states for the circuit fragments.

pub mod dense;
pub mod oracles;
mod run;
mod state;

use thiserror::Error;

use crate::circuit::QubitId;

pub use oracles::{flag_oracle, loadf_oracle, spf_oracle};
pub use run::{run, run_with_target, DeallocVerdict, DirtySeeds, DirtyVerdict, SimOptions, SimOutcome, SimReport, SimState};
pub use state::{Handle, SparseState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("component support {support} exceeds cap {cap}")]
    PeakQubitsExceeded { support: usize, cap: usize },
    #[error("qubit {qubit} deallocated at layer {layer} with |1> mass {mass:e}")]
    DeallocNotZero { qubit: QubitId, layer: usize, mass: f64 },
    #[error("dirty qubit {qubit} not restored at layer {layer} (defect {defect:e})")]
    DirtyNotRestored { qubit: QubitId, layer: usize, defect: f64 },
    #[error("norm drifted by {0:e}")]
    NormDrift(f64),
    #[error("qubit {0} has no simulated state")]
    UnknownQubit(QubitId),
    #[error("simulator handle {0} is not live")]
    UnknownHandle(Handle),
    #[error("requested qubits are entangled with live handle {0} outside the set")]
    Entangled(Handle),
    #[error("bad simulator input: {0}")]
    BadInput(String),
}
