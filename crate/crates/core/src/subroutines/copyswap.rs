use crate::circuit::{Program, QubitId};

use super::copy::{copy_layer, copy_register, cs_layer};
use super::FragmentError;

/// Copies control bit k_i (given least significant first) into a register of
/// 2ⁱ qubits while routing target[0] to slot k of `target`, in m layers.
/// Returns the copy registers, each starting with its original control bit;
/// the fresh copies stay allocated for the caller to uncompute.
pub fn copyswap(p: &mut Program, bits_lsb: &[QubitId], target: &[QubitId]) -> Result<Vec<Vec<QubitId>>, FragmentError> {
    let regs: Vec<Vec<QubitId>> = bits_lsb.iter().enumerate().map(|(i, &b)| copy_register(p, b, 1 << i)).collect();
    copyswap_into(p, &regs, target)?;
    Ok(regs)
}

/// [`copyswap`] over caller-provided copy registers, where `regs[i]` has 2ⁱ
/// qubits starting with bit i. Step t applies CS_t from the fully copied
/// register of bit t and, in parallel, copying layer t on every higher bit.
pub fn copyswap_into(p: &mut Program, regs: &[Vec<QubitId>], target: &[QubitId]) -> Result<(), FragmentError> {
    let m = regs.len();
    if target.len() != 1usize << m || regs.iter().enumerate().any(|(i, r)| r.len() != 1 << i) {
        return Err(FragmentError::BadRegisterShape(format!(
            "copyswap over {m} bits needs copy registers of sizes 1, 2, ..., 2^{} and {} targets, got {}",
            m.saturating_sub(1),
            1usize << m,
            target.len()
        )));
    }
    for t in 0..m {
        cs_layer(p, t, &regs[t], target)?;
        for reg in &regs[t + 1..] {
            copy_layer(p, reg, t);
        }
    }
    Ok(())
}

/// The copy-register sizes' closed-form spacetime estimate,
/// Σ_{t<m} (m + (2ᵗ−1)(m−t) + 2ᵗ⁺¹).
pub fn copyswap_sa_formula(m: usize) -> u64 {
    (0..m).map(|t| (m + ((1usize << t) - 1) * (m - t) + (2usize << t)) as u64).sum()
}
