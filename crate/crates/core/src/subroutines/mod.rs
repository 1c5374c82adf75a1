//! Gate-level building blocks: copy trees, controlled-swap layers,
//! CopySwap, SPF, FLAG and LOADF.
//!
//! Every emitter appends to a [`Program`] and allocates its own workspace
//! lazily; workspace is returned to its initial state and freed before the
//! emitter returns unless the function says otherwise.

pub mod copy;
pub mod copyswap;
pub mod flag;
pub mod loadf;
pub mod spf;

use thiserror::Error;

pub use copy::{copy, copy_layer, copy_register, cs_layer, fanout, filled, uncopy};
pub use copyswap::{copyswap, copyswap_into, copyswap_sa_formula};
pub use flag::flag;
pub use loadf::{loadf, loadf_adjoint, LoadfOptions};
pub use spf::{check_spf_rules, spf, spf_ancilla_count, spf_copy_size, spf_schedule, SpfOp};

use crate::amplitudes::{AngleSet, CspAngleSet};
use crate::circuit::{Circuit, CircuitError, GateKind, Placement, Program, QubitId};

#[derive(Debug, Error)]
pub enum FragmentError {
    #[error("register size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("{what} needs {need} qubits, got {got}")]
    RegisterTooSmall { what: &'static str, need: usize, got: usize },
    #[error("{0}")]
    BadRegisterShape(String),
    #[error("schedule violates ordering rules: {0}")]
    Schedule(String),
    #[error("unknown fragment {0:?}")]
    UnknownFragment(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Standalone fragments that [`fragment_circuit`] can build.
pub const FRAGMENTS: [&str; 6] = ["copy", "cs", "copyswap", "spf", "flag", "loadf"];

/// Registers of sizes 1, 2, …, 2^{m−1}.
pub fn level_registers(p: &mut Program, m: usize, persistent: bool) -> Vec<Vec<QubitId>> {
    (0..m)
        .map(|s| {
            if persistent {
                p.persistent_n(1 << s)
            } else {
                p.alloc_n(1 << s, crate::circuit::QubitKind::Clean)
            }
        })
        .collect()
}

/// Sources for the angles a standalone fragment needs.
pub enum FragmentAngles<'a> {
    None,
    Sp(&'a AngleSet),
    Csp(&'a CspAngleSet),
}

/// Builds one fragment as a self-contained circuit whose inputs are persistent
/// qubits. `m` sets its size: c = 2^m for copy, t = m for cs, m control bits
/// otherwise. SPF prepares its angle registers with R_y first; LOADF starts
/// from all flags set.
pub fn fragment_circuit(name: &str, m: usize, angles: FragmentAngles<'_>) -> Result<Circuit, FragmentError> {
    // copy and cs take log2 of a register size, so 0 is a valid (trivial) size for them
    if m == 0 && !matches!(name, "copy" | "cs") {
        return Err(FragmentError::BadRegisterShape(format!("{name} needs m >= 1")));
    }
    let mut p = Program::new();
    match name {
        "copy" => {
            let reg = p.persistent_n(1 << m);
            p.register("D", &reg);
            copy(&mut p, &reg)?;
        }
        "cs" => {
            let ctrl = p.persistent_n(1 << m);
            let tgt = p.persistent_n(2 << m);
            p.register("R", &ctrl);
            p.register("S", &tgt);
            cs_layer(&mut p, m, &ctrl, &tgt)?;
        }
        "copyswap" => {
            let bits = p.persistent_n(m);
            let tgt = p.persistent_n(1 << m);
            p.register("D", &bits);
            p.register("A", &tgt);
            let regs: Vec<Vec<QubitId>> = bits
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let mut r = vec![b];
                    r.extend(p.persistent_n((1 << i) - 1));
                    r
                })
                .collect();
            copyswap_into(&mut p, &regs, &tgt)?;
            let copies: Vec<QubitId> = regs.iter().flat_map(|r| r[1..].to_vec()).collect();
            p.register("D1", &copies);
        }
        "spf" => {
            let data = p.persistent_n(m);
            let a = level_registers(&mut p, m, true);
            p.register("D", &data);
            p.register("A", &a.concat());
            for s in 0..m {
                for q in 0..1usize << s {
                    let theta = match &angles {
                        FragmentAngles::Sp(set) => set.get(s, q),
                        _ => std::f64::consts::FRAC_PI_2,
                    };
                    p.gate(GateKind::Ry(theta), &[a[s][q]]);
                }
            }
            spf(&mut p, &data, &a)?;
        }
        "flag" => {
            let data = p.persistent_n(m);
            let f = level_registers(&mut p, m, true);
            p.register("D", &data);
            p.register("F", &f.concat());
            for q in f.iter().flatten() {
                p.gate(GateKind::X, &[*q]);
            }
            flag(&mut p, &data, &f)?;
        }
        "loadf" => {
            let FragmentAngles::Csp(set) = angles else {
                return Err(FragmentError::BadRegisterShape("loadf needs CSP angles".into()));
            };
            let nt = (1usize << (set.n() - set.m())) - 1;
            let ctrl = p.persistent_n(set.m());
            let b0 = p.persistent_n(nt);
            let f0 = p.persistent_n(nt);
            p.register("D", &ctrl);
            p.register("B0", &b0);
            p.register("F0", &f0);
            for &q in &f0 {
                p.gate(GateKind::X, &[q]);
            }
            loadf(&mut p, &ctrl, &b0, &f0, set, LoadfOptions::default())?;
            p.set_meta("n", set.n().into());
        }
        other => return Err(FragmentError::UnknownFragment(other.to_string())),
    }
    p.set_meta("fragment", name.into());
    p.set_meta("m", m.into());
    Ok(p.to_circuit(Placement::Asap)?)
}

#[cfg(test)]
mod tests;
