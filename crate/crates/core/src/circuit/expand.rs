use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, CircuitError, Placement};
use super::gate::{Gate, GateKind, QubitId};
use super::program::{Instr, Program};

/// Expansion target gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpandTarget {
    /// Arbitrary single-qubit gates plus CNOT.
    U2Cnot,
    /// H, S, T, CNOT with rotations kept as cost-modeled tokens.
    HstCnot,
}

fn g(kind: GateKind, qs: &[QubitId]) -> Gate {
    Gate::new(kind, qs)
}

/// One decomposition step; the result may still contain composite gates.
pub fn decompose_once(gate: &Gate, target: ExpandTarget) -> Option<Vec<Gate>> {
    use GateKind::*;
    let q = &gate.qubits;
    Some(match gate.kind {
        Swap => vec![g(Cnot, &[q[0], q[1]]), g(Cnot, &[q[1], q[0]]), g(Cnot, &[q[0], q[1]])],
        Toffoli => {
            let (c1, c2, t) = (q[0], q[1], q[2]);
            vec![
                g(H, &[t]),
                g(Cnot, &[c2, t]),
                g(Tdg, &[t]),
                g(Cnot, &[c1, t]),
                g(T, &[t]),
                g(Cnot, &[c2, t]),
                g(Tdg, &[t]),
                g(T, &[c2]),
                g(Cnot, &[c1, t]),
                g(Cnot, &[c1, c2]),
                g(T, &[t]),
                g(T, &[c1]),
                g(Tdg, &[c2]),
                g(H, &[t]),
                g(Cnot, &[c1, c2]),
            ]
        }
        Cswap => {
            let (c, a, b) = (q[0], q[1], q[2]);
            vec![g(Cnot, &[b, a]), g(Toffoli, &[c, a, b]), g(Cnot, &[b, a])]
        }
        CRy(th) => vec![g(Cnot, &[q[0], q[1]]), g(Ry(-th / 2.0), &[q[1]]), g(Cnot, &[q[0], q[1]]), g(Ry(th / 2.0), &[q[1]])],
        CRz(th) => vec![g(Cnot, &[q[0], q[1]]), g(Rz(-th / 2.0), &[q[1]]), g(Cnot, &[q[0], q[1]]), g(Rz(th / 2.0), &[q[1]])],
        CCRy(th) => vec![
            g(Toffoli, &[q[0], q[1], q[2]]),
            g(Ry(-th / 2.0), &[q[2]]),
            g(Toffoli, &[q[0], q[1], q[2]]),
            g(Ry(th / 2.0), &[q[2]]),
        ],
        CCRz(th) => vec![
            g(Toffoli, &[q[0], q[1], q[2]]),
            g(Rz(-th / 2.0), &[q[2]]),
            g(Toffoli, &[q[0], q[1], q[2]]),
            g(Rz(th / 2.0), &[q[2]]),
        ],
        X if target == ExpandTarget::HstCnot => vec![g(H, q), g(S, q), g(S, q), g(H, q)],
        Z if target == ExpandTarget::HstCnot => vec![g(S, q), g(S, q)],
        Sdg if target == ExpandTarget::HstCnot => vec![g(S, q), g(S, q), g(S, q)],
        Tdg if target == ExpandTarget::HstCnot => vec![g(T, q), g(S, q), g(S, q), g(S, q)],
        _ => return None,
    })
}

/// Fully expands one gate into the target set.
pub fn decompose(gate: &Gate, target: ExpandTarget) -> Vec<Gate> {
    match decompose_once(gate, target) {
        None => vec![gate.clone()],
        Some(parts) => parts.iter().flat_map(|p| decompose(p, target)).collect(),
    }
}

/// Rewrites every gate into the target set and reschedules ASAP.
pub fn expand(c: &Circuit, target: ExpandTarget) -> Result<Circuit, CircuitError> {
    let prog = c.to_program();
    let mut out = Program::new();
    for ins in prog.instrs() {
        match ins {
            Instr::Gate(gate) => {
                for part in decompose(gate, target) {
                    out.push(Instr::Gate(part));
                }
            }
            other => out.push(other.clone()),
        }
    }
    for (name, ids) in prog.registers() {
        out.register(name, ids);
    }
    for (k, v) in prog.meta() {
        out.set_meta(k, v.clone());
    }
    out.to_circuit(Placement::Asap)
}
