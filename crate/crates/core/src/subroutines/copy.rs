use crate::circuit::{GateKind, Program, QubitId, QubitKind};

use super::FragmentError;

/// A source qubit followed by `c − 1` freshly allocated targets.
pub fn copy_register(p: &mut Program, src: QubitId, c: usize) -> Vec<QubitId> {
    let mut reg = vec![src];
    reg.extend(p.alloc_n(c - 1, QubitKind::Clean));
    reg
}

/// Copying layer ⨁_t: CNOT from reg[j·c/2ᵗ] to reg[j·c/2ᵗ + c/2ᵗ⁺¹] for j < 2ᵗ.
pub fn copy_layer(p: &mut Program, reg: &[QubitId], t: usize) {
    let c = reg.len();
    let stride = c >> t;
    for j in 0..1usize << t {
        p.gate(GateKind::Cnot, &[reg[j * stride], reg[j * stride + stride / 2]]);
    }
}

/// Positions of `reg` holding copies after `t` copying layers.
pub fn filled(reg: &[QubitId], t: usize) -> Vec<QubitId> {
    let stride = reg.len() >> t;
    (0..1usize << t).map(|j| reg[j * stride]).collect()
}

/// α|0⟩+β|1⟩ on reg[0] ↦ α|0ᶜ⟩+β|1ᶜ⟩ in log₂ c layers.
pub fn copy(p: &mut Program, reg: &[QubitId]) -> Result<(), FragmentError> {
    let c = reg.len();
    if !c.is_power_of_two() {
        return Err(FragmentError::NotPowerOfTwo(c));
    }
    for t in 0..c.trailing_zeros() as usize {
        copy_layer(p, reg, t);
    }
    Ok(())
}

/// Inverse of [`copy`].
pub fn uncopy(p: &mut Program, reg: &[QubitId]) -> Result<(), FragmentError> {
    let c = reg.len();
    if !c.is_power_of_two() {
        return Err(FragmentError::NotPowerOfTwo(c));
    }
    for t in (0..c.trailing_zeros() as usize).rev() {
        copy_layer(p, reg, t);
    }
    Ok(())
}

/// Copies `src` into every target by repeated doubling; works for any count.
pub fn fanout(p: &mut Program, src: QubitId, targets: &[QubitId]) {
    let mut holders = vec![src];
    let mut next = 0;
    while next < targets.len() {
        let round = holders.len();
        for h in 0..round {
            if next == targets.len() {
                break;
            }
            p.gate(GateKind::Cnot, &[holders[h], targets[next]]);
            holders.push(targets[next]);
            next += 1;
        }
    }
}

/// CS_t: CSWAP(R_i, S_i, S_{i+2ᵗ}) for i < 2ᵗ, all in one layer.
pub fn cs_layer(p: &mut Program, t: usize, controls: &[QubitId], targets: &[QubitId]) -> Result<(), FragmentError> {
    let half = 1usize << t;
    if controls.len() < half {
        return Err(FragmentError::RegisterTooSmall { what: "CS controls", need: half, got: controls.len() });
    }
    if targets.len() < 2 * half {
        return Err(FragmentError::RegisterTooSmall { what: "CS targets", need: 2 * half, got: targets.len() });
    }
    for i in 0..half {
        p.gate(GateKind::Cswap, &[controls[i], targets[i], targets[i + half]]);
    }
    Ok(())
}
