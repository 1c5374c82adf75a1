use crate::amplitudes::CspAngleSet;
use crate::circuit::{GateKind, Instr, Program, QubitId, QubitKind};

use super::copy::{copy, copy_register, fanout};
use super::copyswap::copyswap;
use super::FragmentError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadfOptions {
    /// Allocate the B-side CopySwap targets (B1) as dirty qubits.
    pub dirty_b1: bool,
    /// Skip the flag fanout and drive each rotation by its A-copy alone.
    /// Valid only when every flag is known to be 1.
    pub unflagged: bool,
}

/// Qubits touched by the rotation layer, indexed as `[k][b]`.
struct RotationSites {
    a: Vec<Vec<QubitId>>,
    f: Option<Vec<Vec<QubitId>>>,
    target: Vec<Vec<QubitId>>,
}

fn check_shapes(control: &[QubitId], b0: &[QubitId], f0: &[QubitId], angles: &CspAngleSet) -> Result<(), FragmentError> {
    let m = control.len();
    let nt = (1usize << (angles.n() - angles.m())) - 1;
    if angles.m() != m {
        return Err(FragmentError::BadRegisterShape(format!("angles built for m = {}, control has {m} qubits", angles.m())));
    }
    if b0.len() != nt || f0.len() != nt {
        return Err(FragmentError::BadRegisterShape(format!(
            "B0 and F0 need {nt} qubits, got {} and {}",
            b0.len(),
            f0.len()
        )));
    }
    Ok(())
}

fn setup(p: &mut Program, control: &[QubitId], b0: &[QubitId], f0: &[QubitId], opts: LoadfOptions) -> Result<RotationSites, FragmentError> {
    let m = control.len();
    let big_m = 1usize << m;
    let nt = b0.len();

    let a0 = p.alloc(QubitKind::Clean);
    p.register("A0", &[a0]);
    p.gate(GateKind::X, &[a0]);

    // One copy of the control per B group, plus the original for the A side.
    let ctrl_copies: Vec<Vec<QubitId>> = control.iter().map(|&c| copy_register(p, c, nt + 1)).collect();
    let d2: Vec<QubitId> = ctrl_copies.iter().flat_map(|r| r[1..].to_vec()).collect();
    p.register("D2", &d2);
    for r in &ctrl_copies {
        copy(p, r)?;
    }

    let a1 = p.alloc_n(big_m - 1, QubitKind::Clean);
    p.register("A1", &a1);
    let mut a_target = vec![a0];
    a_target.extend(&a1);
    let a_bits: Vec<QubitId> = control.iter().rev().copied().collect();
    let a_regs = copyswap(p, &a_bits, &a_target)?;
    let d1: Vec<QubitId> = a_regs.iter().flat_map(|r| r[1..].to_vec()).collect();
    p.register("D1", &d1);

    let b1_kind = if opts.dirty_b1 { QubitKind::Dirty } else { QubitKind::Clean };
    let mut b_targets = Vec::with_capacity(nt);
    let mut b1_all = Vec::new();
    let mut d3 = Vec::new();
    for b in 0..nt {
        let b1 = p.alloc_n(big_m - 1, b1_kind);
        b1_all.extend(&b1);
        let mut tgt = vec![b0[b]];
        tgt.extend(b1);
        let bits: Vec<QubitId> = ctrl_copies.iter().rev().map(|r| r[b + 1]).collect();
        let regs = copyswap(p, &bits, &tgt)?;
        d3.extend(regs.iter().flat_map(|r| r[1..].to_vec()));
        b_targets.push(tgt);
    }
    p.register("B1", &b1_all);
    p.register("D3", &d3);

    let mut a_copies = Vec::with_capacity(big_m);
    let mut a2 = Vec::new();
    for &src in &a_target {
        let extra = p.alloc_n(nt - 1, QubitKind::Clean);
        fanout(p, src, &extra);
        a2.extend(&extra);
        let mut row = vec![src];
        row.extend(extra);
        a_copies.push(row);
    }
    p.register("A2", &a2);

    let f = if opts.unflagged {
        None
    } else {
        let mut f1 = Vec::new();
        let mut rows = Vec::with_capacity(nt);
        for &src in f0 {
            let reg = copy_register(p, src, big_m);
            copy(p, &reg)?;
            f1.extend(&reg[1..]);
            rows.push(reg);
        }
        p.register("F1", &f1);
        Some((0..big_m).map(|k| rows.iter().map(|r| r[k]).collect()).collect())
    };

    let target = (0..big_m).map(|k| b_targets.iter().map(|t| t[k]).collect()).collect();
    Ok(RotationSites { a: a_copies, f, target })
}

fn rotations(p: &mut Program, sites: &RotationSites, angles: &CspAngleSet) {
    let big_m = sites.a.len();
    let levels = angles.n() - angles.m();
    let slots: Vec<(usize, usize)> = (0..levels).flat_map(|s| (0..1usize << s).map(move |q| (s, q))).collect();
    let ctrl = |k: usize, b: usize| -> Vec<QubitId> {
        match &sites.f {
            Some(f) => vec![sites.a[k][b], f[k][b], sites.target[k][b]],
            None => vec![sites.a[k][b], sites.target[k][b]],
        }
    };
    let (ry, rz): (fn(f64) -> GateKind, fn(f64) -> GateKind) = match sites.f {
        Some(_) => (GateKind::CCRy, GateKind::CCRz),
        None => (GateKind::CRy, GateKind::CRz),
    };
    p.barrier();
    for k in 0..big_m {
        for (b, &(s, q)) in slots.iter().enumerate() {
            p.gate(ry(angles.get(k, s, q)), &ctrl(k, b));
        }
    }
    if angles.phases().is_none() {
        return;
    }
    let last = levels - 1;
    let first_last = (1usize << last) - 1;
    for k in 0..big_m {
        for q in 0..1usize << last {
            let (f0, f1) = (angles.phase(k, 2 * q), angles.phase(k, 2 * q + 1));
            p.gate(rz(f1 - f0), &ctrl(k, first_last + q));
        }
    }
    for k in 0..big_m {
        for q in 0..1usize << last {
            let b = first_last + q;
            let alpha = (angles.phase(k, 2 * q) + angles.phase(k, 2 * q + 1)) / 2.0;
            match &sites.f {
                Some(f) => {
                    p.gate(GateKind::Phase(alpha / 2.0), &[sites.a[k][b]]);
                    p.gate(GateKind::CRz(alpha), &[sites.a[k][b], f[k][b]]);
                }
                None => p.gate(GateKind::Phase(alpha), &[sites.a[k][b]]),
            }
        }
    }
}

/// Loads, conditioned on the m control qubits holding k, the rotations
/// θ^{(k)}_{s,p} onto the B0 slots whose F0 flag is set. Every workspace
/// qubit it allocates is uncomputed and freed before it returns.
pub fn loadf(
    p: &mut Program,
    control: &[QubitId],
    b0: &[QubitId],
    f0: &[QubitId],
    angles: &CspAngleSet,
    opts: LoadfOptions,
) -> Result<(), FragmentError> {
    check_shapes(control, b0, f0, angles)?;
    let start = p.mark();
    let sites = setup(p, control, b0, f0, opts)?;
    let setup_instrs: Vec<Instr> = p.instrs()[start..].to_vec();
    rotations(p, &sites, angles);
    p.barrier();
    p.push_adjoint(&setup_instrs);
    Ok(())
}

/// The inverse of [`loadf`] with the flagged rotation layer.
pub fn loadf_adjoint(
    p: &mut Program,
    control: &[QubitId],
    b0: &[QubitId],
    f0: &[QubitId],
    angles: &CspAngleSet,
    opts: LoadfOptions,
) -> Result<(), FragmentError> {
    let mark = p.mark();
    loadf(p, control, b0, f0, angles, LoadfOptions { unflagged: false, ..opts })?;
    let forward = p.split_off(mark);
    p.push_adjoint(&forward);
    Ok(())
}
