use crate::circuit::{GateKind, Program, QubitId, QubitKind};

use super::copy::{copy_layer, copy_register, cs_layer, filled};
use super::FragmentError;

/// One logical step of the SPF schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpfOp {
    /// Inject the root of A_q into D_q.
    Swap { q: usize },
    /// Copying layer ⨁_t on the copy register of D_q.
    Copy { q: usize, t: usize },
    /// CS_t controlled by copies of D_q onto A_u.
    Cs { q: usize, t: usize, u: usize },
}

/// Size of the copy register of D_q (including D_q itself).
pub fn spf_copy_size(m: usize, q: usize) -> usize {
    if q + 2 <= m {
        1 << (m - 2 - q)
    } else {
        1
    }
}

/// First half of the schedule, from the closed-form index rules: step i has
/// three sub-steps; sub-step 1 advances D_q for q < i−1, sub-step 2 for
/// q < i, sub-step 3 for q ≤ i, with d = i − q selecting the operation.
pub fn spf_schedule(m: usize) -> Vec<SpfOp> {
    let lim_cs = |q: usize| (m as isize) - (q as isize) - 2;
    let lim_copy = |q: usize| (m as isize) - (q as isize) - 3;
    let mut ops = Vec::new();
    for i in 0..m {
        for q in 0..i.saturating_sub(1) {
            let d = (i - q) as isize;
            if d % 2 == 1 {
                let t = 3 * (d - 1) / 2 - 1;
                if t <= lim_copy(q) {
                    ops.push(SpfOp::Copy { q, t: t as usize });
                }
            } else {
                let t = 3 * d / 2 - 2;
                if t <= lim_cs(q) {
                    ops.push(SpfOp::Cs { q, t: t as usize, u: i - 1 + (d as usize) / 2 });
                }
            }
        }
        for q in 0..i {
            let d = (i - q) as isize;
            if d % 2 == 1 {
                let t = 3 * (d - 1) / 2;
                if t <= lim_cs(q) {
                    ops.push(SpfOp::Cs { q, t: t as usize, u: i + (d as usize - 1) / 2 });
                }
            } else {
                let t = 3 * d / 2 - 2;
                if t <= lim_copy(q) {
                    ops.push(SpfOp::Copy { q, t: t as usize });
                }
            }
        }
        for q in 0..=i {
            let d = (i - q) as isize;
            if d == 0 {
                ops.push(SpfOp::Swap { q });
            } else if d % 2 == 1 {
                let t = 3 * (d - 1) / 2;
                if t <= lim_copy(q) {
                    ops.push(SpfOp::Copy { q, t: t as usize });
                }
            } else {
                let t = 3 * d / 2 - 1;
                if t <= lim_cs(q) {
                    ops.push(SpfOp::Cs { q, t: t as usize, u: i + (d as usize) / 2 });
                }
            }
        }
    }
    ops
}

/// Checks the ordering rules on a first-half schedule and returns every
/// violation found:
/// 1. copying layers of each D_q appear in increasing order, all present;
/// 2. copying of D_q starts only after D_q received its angle;
/// 3. CS_t from D_q comes after its copying layer t−1;
/// 4. A_u receives CS_{u−1}, …, CS_0 (from D_0, …, D_{u−1}) before its swap.
pub fn check_spf_rules(m: usize, ops: &[SpfOp]) -> Vec<String> {
    let mut bad = Vec::new();
    let pos = |pred: &dyn Fn(&SpfOp) -> bool| ops.iter().position(pred);
    for q in 0..m {
        let swap = pos(&|o| *o == SpfOp::Swap { q });
        if swap.is_none() {
            bad.push(format!("D_{q} never swapped"));
        }
        let copies: Vec<(usize, usize)> = ops
            .iter()
            .enumerate()
            .filter_map(|(i, o)| match *o {
                SpfOp::Copy { q: qq, t } if qq == q => Some((i, t)),
                _ => None,
            })
            .collect();
        let expect = spf_copy_size(m, q).trailing_zeros() as usize;
        let ts: Vec<usize> = copies.iter().map(|c| c.1).collect();
        if ts != (0..expect).collect::<Vec<_>>() {
            bad.push(format!("rule 1: D_{q} copy layers {ts:?}, expected 0..{expect}"));
        }
        if let (Some(s), Some(first)) = (swap, copies.first()) {
            if first.0 < s {
                bad.push(format!("rule 2: D_{q} copied before its swap"));
            }
        }
        for (i, o) in ops.iter().enumerate() {
            if let SpfOp::Cs { q: qq, t, .. } = *o {
                if qq == q && t > 0 {
                    match copies.iter().find(|c| c.1 == t - 1) {
                        Some(c) if c.0 < i => {}
                        _ => bad.push(format!("rule 3: CS_{t}(D_{q}) before copy layer {}", t - 1)),
                    }
                }
            }
        }
    }
    for u in 1..m {
        let swap = pos(&|o| *o == SpfOp::Swap { q: u }).unwrap_or(usize::MAX);
        let seq: Vec<(usize, usize)> = ops
            .iter()
            .enumerate()
            .filter_map(|(i, o)| match *o {
                SpfOp::Cs { q, t, u: uu } if uu == u => Some((i, t + q)),
                _ => None,
            })
            .collect();
        let ts: Vec<usize> = ops
            .iter()
            .filter_map(|o| match *o {
                SpfOp::Cs { t, u: uu, .. } if uu == u => Some(t),
                _ => None,
            })
            .collect();
        if ts != (0..u).rev().collect::<Vec<_>>() {
            bad.push(format!("rule 4: A_{u} receives CS {ts:?}"));
        }
        if seq.iter().any(|&(i, tq)| i > swap || tq + 1 != u) {
            bad.push(format!("rule 4: A_{u} CS placement or control mismatch"));
        }
    }
    bad
}

/// Injects the angle states of `angle_regs` (A_s of size 2ˢ) into `data`,
/// leaving garbage in the angle registers. Uses 2^{m−1} − m fresh ancillae,
/// all returned to |0⟩ and freed by the mirrored second half.
pub fn spf(p: &mut Program, data: &[QubitId], angle_regs: &[Vec<QubitId>]) -> Result<(), FragmentError> {
    let m = data.len();
    if angle_regs.len() != m || angle_regs.iter().enumerate().any(|(s, r)| r.len() != 1 << s) {
        return Err(FragmentError::BadRegisterShape(format!("spf needs angle registers of sizes 1, 2, ..., 2^{}", m.saturating_sub(1))));
    }
    let ops = spf_schedule(m);
    let violations = check_spf_rules(m, &ops);
    if !violations.is_empty() {
        return Err(FragmentError::Schedule(violations.join("; ")));
    }
    let regs: Vec<Vec<QubitId>> = (0..m).map(|q| copy_register(p, data[q], spf_copy_size(m, q))).collect();
    let emit = |p: &mut Program, op: &SpfOp| -> Result<(), FragmentError> {
        match *op {
            SpfOp::Swap { q } => p.gate(GateKind::Swap, &[data[q], angle_regs[q][0]]),
            SpfOp::Copy { q, t } => copy_layer(p, &regs[q], t),
            SpfOp::Cs { q, t, u } => cs_layer(p, t, &filled(&regs[q], t), &angle_regs[u])?,
        }
        Ok(())
    };
    for op in &ops {
        emit(p, op)?;
    }
    for op in ops.iter().rev() {
        if !matches!(op, SpfOp::Swap { .. }) {
            emit(p, op)?;
        }
    }
    for reg in &regs {
        p.free_all(&reg[1..], QubitKind::Clean);
    }
    Ok(())
}

/// Number of fresh ancillae SPF allocates for data-bit copies.
pub fn spf_ancilla_count(m: usize) -> usize {
    (0..m).map(|q| spf_copy_size(m, q) - 1).sum()
}
