//! Small dense reference simulator for unitary checks on a few qubits.

use num_complex::Complex64;

use crate::circuit::{Action, Gate};

/// Applies `g` to `state` over `n` qubits, where qubit id i is bit n−1−i.
pub fn apply(state: &mut [Complex64], n: usize, g: &Gate) {
    let pos: Vec<usize> = g.qubits.iter().map(|q| n - 1 - q.index()).collect();
    let nc = g.kind.controls();
    let ctrl_mask: usize = pos[..nc].iter().map(|p| 1usize << p).sum();
    match g.kind.action() {
        Action::Swap => {
            let (a, b) = (pos[nc], pos[nc + 1]);
            for i in 0..state.len() {
                if i & ctrl_mask == ctrl_mask && (i >> a) & 1 == 1 && (i >> b) & 1 == 0 {
                    let j = (i & !(1 << a)) | (1 << b);
                    state.swap(i, j);
                }
            }
        }
        Action::Unitary(u) => {
            let t = pos[nc];
            for i in 0..state.len() {
                if i & ctrl_mask == ctrl_mask && (i >> t) & 1 == 0 {
                    let j = i | (1 << t);
                    let (a0, a1) = (state[i], state[j]);
                    state[i] = u[0][0] * a0 + u[0][1] * a1;
                    state[j] = u[1][0] * a0 + u[1][1] * a1;
                }
            }
        }
    }
}

/// Unitary of a gate sequence on `n` qubits as `u[row][col]`.
pub fn unitary(gates: &[Gate], n: usize) -> Vec<Vec<Complex64>> {
    let dim = 1usize << n;
    let mut cols = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[c] = Complex64::new(1.0, 0.0);
        for g in gates {
            apply(&mut v, n, g);
        }
        cols.push(v);
    }
    (0..dim).map(|r| (0..dim).map(|c| cols[c][r]).collect()).collect()
}

/// Largest entrywise difference between two matrices.
pub fn max_entry_diff(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}
