//! Full state-preparation circuits.
//!
//! [`spcsp`] prepares the leading m qubits with SP and then loads the
//! remaining n − m qubits with CSP conditioned on them. [`reflection`] wraps
//! the same unitary into I − 2|ψ⟩⟨ψ|.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amplitudes::{build_angle_tree, csp_angles, partition_norms, sp_angles, AmplitudeError, AngleSet, CspAngleSet, PartitionNorms, TargetState};
use crate::circuit::{Circuit, CircuitError, GateKind, Instr, Placement, Program, QubitId, QubitKind};
use crate::subroutines::{flag, level_registers, loadf, loadf_adjoint, spf, FragmentError, LoadfOptions};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("no split m satisfies ceil(log2 n) <= m <= n - log2 n for n = {0}")]
    NoValidSplit(usize),
    #[error("m = {m} is outside 1..{n} for n = {n}")]
    BadSplit { m: usize, n: usize },
    #[error("target has negative or complex amplitudes; enable complex mode")]
    NeedsComplexMode,
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Size of the SP register; chosen automatically when `None`.
    pub m: Option<usize>,
    /// Target error, used only for approximate resource reporting.
    pub epsilon: f64,
    pub complex_mode: bool,
    pub dirty_b1: bool,
    /// Drop the flag controls from the first LOADF, whose flags are all set.
    pub loadf_first_optimized: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig { m: None, epsilon: 1e-3, complex_mode: false, dirty_b1: false, loadf_first_optimized: false }
    }
}

impl ProtocolConfig {
    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn complex(mut self) -> Self {
        self.complex_mode = true;
        self
    }
}

fn ceil_log2(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}

/// Whether m lies in ⌈log₂ n⌉ ≤ m ≤ ⌊n − log₂ n⌋.
pub fn in_window(n: usize, m: usize) -> bool {
    let upper = (n as f64 - (n as f64).log2()).floor();
    m >= ceil_log2(n) && (m as f64) <= upper
}

/// m = n − ⌈log₂ n⌉, provided n ≥ 3 and m lies in the window.
pub fn choose_m(n: usize) -> Result<usize, ProtocolError> {
    let m = n.saturating_sub(ceil_log2(n));
    if n >= 3 && in_window(n, m) {
        Ok(m)
    } else {
        Err(ProtocolError::NoValidSplit(n))
    }
}

/// The split actually used for `n` qubits under `cfg`; `None` means SP on all
/// n qubits. Real targets with no valid split fall back to SP alone; complex
/// targets, which SP cannot phase, use n − ⌈log₂ n⌉ clamped into 1..n.
pub fn resolve_split(n: usize, cfg: &ProtocolConfig) -> Result<Option<usize>, ProtocolError> {
    if let Some(m) = cfg.m {
        if m == 0 || m > n || (m == n && cfg.complex_mode) {
            return Err(ProtocolError::BadSplit { m, n });
        }
        return Ok((m < n).then_some(m));
    }
    match choose_m(n) {
        Ok(m) => Ok(Some(m)),
        Err(_) if !cfg.complex_mode => Ok(None),
        Err(e) => {
            if n < 2 {
                return Err(e);
            }
            Ok(Some(n.saturating_sub(ceil_log2(n)).clamp(1, n - 1)))
        }
    }
}

fn sp_angle_set(y: &PartitionNorms) -> Result<AngleSet, ProtocolError> {
    Ok(sp_angles(&build_angle_tree(y.values())?))
}

/// Emits U_SP onto `data`, which must start in |0ᵐ⟩.
pub fn emit_sp(p: &mut Program, data: &[QubitId], angles: &AngleSet) -> Result<(), ProtocolError> {
    let m = data.len();
    let a = level_registers(p, m, false);
    p.register("A", &a.concat());
    for s in 0..m {
        for (q, &qubit) in a[s].iter().enumerate() {
            p.gate(GateKind::Ry(angles.get(s, q)), &[qubit]);
        }
    }
    spf(p, data, &a)?;
    let f = level_registers(p, m, false);
    p.register("F", &f.concat());
    for &q in f.iter().flatten() {
        p.gate(GateKind::X, &[q]);
    }
    let flag_start = p.mark();
    flag(p, data, &f)?;
    let flag_instrs: Vec<Instr> = p.instrs()[flag_start..].to_vec();
    p.barrier();
    for s in 0..m {
        for q in 0..1usize << s {
            p.gate(GateKind::CRy(-angles.get(s, q)), &[f[s][q], a[s][q]]);
        }
    }
    p.push_adjoint(&flag_instrs);
    for &q in f.iter().flatten() {
        p.gate(GateKind::X, &[q]);
    }
    p.free_all(&a.concat(), QubitKind::Clean);
    p.free_all(&f.concat(), QubitKind::Clean);
    Ok(())
}

/// Emits U_CSP: for each basis state |k⟩ of `upper`, prepares the k-th
/// normalized block of the target on `lower` (which must start in |0⟩).
pub fn emit_csp(p: &mut Program, upper: &[QubitId], lower: &[QubitId], angles: &CspAngleSet, cfg: &ProtocolConfig) -> Result<(), ProtocolError> {
    let levels = lower.len();
    let b = level_registers(p, levels, false);
    let f = level_registers(p, levels, false);
    let (b_flat, f_flat) = (b.concat(), f.concat());
    p.register("B0", &b_flat);
    p.register("F0", &f_flat);
    for &q in &f_flat {
        p.gate(GateKind::X, &[q]);
    }
    let first = LoadfOptions { dirty_b1: cfg.dirty_b1, unflagged: cfg.loadf_first_optimized };
    loadf(p, upper, &b_flat, &f_flat, angles, first)?;
    spf(p, lower, &b)?;
    let flag_start = p.mark();
    flag(p, lower, &f)?;
    let flag_instrs: Vec<Instr> = p.instrs()[flag_start..].to_vec();
    loadf_adjoint(p, upper, &b_flat, &f_flat, angles, LoadfOptions { dirty_b1: cfg.dirty_b1, unflagged: false })?;
    p.push_adjoint(&flag_instrs);
    for &q in &f_flat {
        p.gate(GateKind::X, &[q]);
    }
    p.free_all(&b_flat, QubitKind::Clean);
    p.free_all(&f_flat, QubitKind::Clean);
    Ok(())
}

/// SP on m persistent data qubits.
pub fn sp_circuit(y: &PartitionNorms) -> Result<Circuit, ProtocolError> {
    let mut p = Program::new();
    let data = p.persistent_n(y.m());
    p.register("D", &data);
    emit_sp(&mut p, &data, &sp_angle_set(y)?)?;
    p.set_meta("m", y.m().into());
    Ok(p.to_circuit(Placement::Asap)?)
}

/// CSP on persistent upper (m) and lower (n − m) data registers.
pub fn csp_circuit(angles: &CspAngleSet, cfg: &ProtocolConfig) -> Result<Circuit, ProtocolError> {
    let mut p = Program::new();
    let data = p.persistent_n(angles.n());
    p.register("D", &data);
    let (upper, lower) = data.split_at(angles.m());
    emit_csp(&mut p, upper, lower, angles, cfg)?;
    p.set_meta("m", angles.m().into());
    p.set_meta("n", angles.n().into());
    Ok(p.to_circuit(Placement::Asap)?)
}

/// A full preparation program with the boundary between its SP and CSP parts.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub program: Program,
    pub data: Vec<QubitId>,
    /// Instruction index where the CSP part starts (the end for SP alone).
    pub sp_end: usize,
    /// SP register size; equals n when CSP is skipped.
    pub m: usize,
}

/// Emits the preparation unitary for `t` onto `data` (|0ⁿ⟩ in) and returns
/// the instruction index where its CSP part begins.
pub fn emit_spcsp(p: &mut Program, data: &[QubitId], t: &TargetState, cfg: &ProtocolConfig) -> Result<(usize, usize), ProtocolError> {
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return Err(ProtocolError::BadEpsilon(cfg.epsilon));
    }
    if !cfg.complex_mode && !t.is_real_nonnegative() {
        return Err(ProtocolError::NeedsComplexMode);
    }
    let n = t.n();
    match resolve_split(n, cfg)? {
        None => {
            let y = PartitionNorms::from_values(t.magnitudes())?;
            emit_sp(p, data, &sp_angle_set(&y)?)?;
            Ok((p.mark(), n))
        }
        Some(m) => {
            let y = partition_norms(t, m)?;
            emit_sp(p, &data[..m], &sp_angle_set(&y)?)?;
            let sp_end = p.mark();
            p.barrier();
            emit_csp(p, &data[..m], &data[m..], &csp_angles(t, m, cfg.complex_mode)?, cfg)?;
            Ok((sp_end, m))
        }
    }
}

/// Builds the preparation program for `t` with persistent data qubits 0..n.
pub fn prepare(t: &TargetState, cfg: &ProtocolConfig) -> Result<Prepared, ProtocolError> {
    let mut p = Program::new();
    let data = p.persistent_n(t.n());
    p.register("D", &data);
    let (sp_end, m) = emit_spcsp(&mut p, &data, t, cfg)?;
    p.set_meta("n", t.n().into());
    p.set_meta("m", m.into());
    p.set_meta("complex", cfg.complex_mode.into());
    Ok(Prepared { program: p, data, sp_end, m })
}

/// The SP+CSP circuit for `t`; the layer where CSP starts is recorded in the
/// `csp_start` metadata entry.
pub fn spcsp(t: &TargetState, cfg: &ProtocolConfig) -> Result<Circuit, ProtocolError> {
    let prep = prepare(t, cfg)?;
    let mut c = prep.program.to_circuit(Placement::Asap)?;
    if prep.m < t.n() {
        let mut head = Program::new();
        for ins in &prep.program.instrs()[..prep.sp_end] {
            head.push(ins.clone());
        }
        let start = head.to_circuit(Placement::Asap)?.span();
        c.set_meta("csp_start", start.into());
    }
    Ok(c)
}

/// Emits the phase flip I − 2|0…0⟩⟨0…0| on `qs` with an AND tree of Toffolis
/// into fresh ancillae, a Z on the root, and the tree's uncomputation.
pub fn emit_zero_reflection(p: &mut Program, qs: &[QubitId]) {
    for &q in qs {
        p.gate(GateKind::X, &[q]);
    }
    let start = p.mark();
    let mut level: Vec<QubitId> = qs.to_vec();
    let mut ancillae = Vec::new();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            if let [a, b] = pair {
                let t = p.alloc(QubitKind::Clean);
                p.gate(GateKind::Toffoli, &[*a, *b, t]);
                ancillae.push(t);
                next.push(t);
            } else {
                next.push(pair[0]);
            }
        }
        level = next;
    }
    let tree: Vec<Instr> = p.instrs()[start..].to_vec();
    if let Some(&root) = level.first() {
        p.gate(GateKind::Z, &[root]);
    }
    p.push_adjoint(&tree);
    for &q in qs {
        p.gate(GateKind::X, &[q]);
    }
}

/// Emits U (I − 2|0⟩⟨0|) U† on `data`, which acts as I − 2|ψ⟩⟨ψ| for the
/// prepared state ψ. The SP angle register A and the CSP slot register B0
/// stay allocated across the middle reflection, which spans them and the data.
pub fn emit_reflection(p: &mut Program, data: &[QubitId], t: &TargetState, cfg: &ProtocolConfig) -> Result<(), ProtocolError> {
    let start = p.mark();
    let reg_count = p.registers().len();
    emit_spcsp(p, data, t, cfg)?;
    let u = p.split_off(start);
    let mut kept: Vec<QubitId> = Vec::new();
    for (name, ids) in &p.registers()[reg_count..] {
        let base = name.split('#').next().unwrap_or(name);
        if base == "A" || base == "B0" {
            kept.extend(ids);
        }
    }
    let kept_set: HashSet<QubitId> = kept.iter().copied().collect();
    let mut ident: HashMap<QubitId, QubitId> = (0..p.num_ids()).map(|i| (QubitId(i), QubitId(i))).collect();
    p.push_mapped(&u, true, &mut ident, &HashSet::new(), &kept_set);
    let mut span: Vec<QubitId> = data.to_vec();
    span.extend(&kept);
    emit_zero_reflection(p, &span);
    p.push_mapped(&u, false, &mut ident, &kept_set, &HashSet::new());
    Ok(())
}

/// The reflection about the state prepared for `t`, on persistent data qubits.
pub fn reflection(t: &TargetState, cfg: &ProtocolConfig) -> Result<Circuit, ProtocolError> {
    let mut p = Program::new();
    let data = p.persistent_n(t.n());
    p.register("D", &data);
    emit_reflection(&mut p, &data, t, cfg)?;
    p.set_meta("n", t.n().into());
    Ok(p.to_circuit(Placement::Asap)?)
}
