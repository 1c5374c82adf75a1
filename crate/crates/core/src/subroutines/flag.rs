use crate::circuit::{GateKind, Program, QubitId, QubitKind};

use super::copy::{copy, copy_register, cs_layer, uncopy};
use super::FragmentError;

/// Marks, for every level s, the slot of F_s named by the leading s data bits.
///
/// Expects each F_s in the all-ones state (the caller applies the X layer) and
/// leaves F_{s,p} = 0 exactly when p equals the s-bit prefix of the data index.
/// The data qubits and their copies are restored.
pub fn flag(p: &mut Program, data: &[QubitId], flags: &[Vec<QubitId>]) -> Result<(), FragmentError> {
    let m = data.len();
    if flags.len() != m || flags.iter().enumerate().any(|(s, r)| r.len() != 1 << s) {
        return Err(FragmentError::BadRegisterShape(format!("flag needs registers of sizes 1, 2, ..., 2^{}", m.saturating_sub(1))));
    }
    for f in flags {
        p.gate(GateKind::X, &[f[0]]);
    }
    // D_q steers CS_i onto F_{q+1+i} for i ≤ m−2−q, so it needs 2^{m−2−q} copies.
    let regs: Vec<Vec<QubitId>> =
        (0..m.saturating_sub(1)).map(|q| copy_register(p, data[q], 1 << (m - 2 - q))).collect();
    for reg in &regs {
        copy(p, reg)?;
    }
    for i in 0..m.saturating_sub(1) {
        for (q, reg) in regs.iter().enumerate().take(m - 1 - i) {
            cs_layer(p, i, reg, &flags[q + 1 + i])?;
        }
    }
    for reg in &regs {
        uncopy(p, reg)?;
        p.free_all(&reg[1..], QubitKind::Clean);
    }
    Ok(())
}
