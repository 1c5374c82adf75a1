//! Layered circuit IR with qubit lifecycles, gate expansion and resource accounting.

#[allow(clippy::module_inception)]
mod circuit;
mod expand;
mod gate;
mod metrics;
mod program;
mod serialize;

pub use circuit::{expected_register_size, Circuit, CircuitError, Lifetime, Placement, Violation};
pub use expand::{decompose, decompose_once, expand, ExpandTarget};
pub use gate::{Action, Gate, GateKind, Mat2, QubitId, QubitKind};
pub use metrics::{
    ancilla_profile, horizon, intervals, profile, spacetime_allocation, CostMode, ErrorBudget, GateSetModel, LowerBounds,
    ResourceReport,
};
pub use program::{Instr, Program};
pub use serialize::{from_json, to_json, to_text, AllocDoc, CircuitDoc, DeallocDoc, GateDoc};
