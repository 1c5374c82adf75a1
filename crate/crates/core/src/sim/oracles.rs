//! Circuit-free constructions of the states the fragments are meant to produce.

use num_complex::Complex64;

use crate::amplitudes::{AngleSet, CspAngleSet, PartitionNorms};

/// f_{(s,p)|j} as `table[s][p]`: set exactly when p equals the leading s bits
/// of the m-bit index j (bit 0 of the register is the most significant).
pub fn flag_oracle(j: usize, m: usize) -> Vec<Vec<bool>> {
    (0..m).map(|s| (0..1usize << s).map(|p| p == j >> (m - s)).collect()).collect()
}

fn kron(a: &[Complex64], b: [Complex64; 2]) -> Vec<Complex64> {
    a.iter().flat_map(|x| [x * b[0], x * b[1]]).collect()
}

fn ry_state(theta: f64) -> [Complex64; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [Complex64::new(c, 0.0), Complex64::new(s, 0.0)]
}

const KET0: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];

/// Σ_j (y_j/‖y‖)|j⟩|g_j⟩ over the m data qubits followed by the angle
/// registers in (s, p) order. In |g_j⟩ the slots on j's path hold |0⟩ and every
/// other slot keeps its angle state.
pub fn spf_oracle(y: &PartitionNorms, angles: &AngleSet) -> Vec<Complex64> {
    let m = y.m();
    let big_m = 1usize << m;
    let norm = y.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let garbage_bits = big_m - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); big_m << garbage_bits];
    for j in 0..big_m {
        let f = flag_oracle(j, m);
        let mut g = vec![Complex64::new(y.values()[j] / norm, 0.0)];
        for s in 0..m {
            for p in 0..1usize << s {
                g = kron(&g, if f[s][p] { KET0 } else { ry_state(angles.get(s, p)) });
            }
        }
        let base = j << garbage_bits;
        for (i, a) in g.into_iter().enumerate() {
            out[base + i] = a;
        }
    }
    out
}

/// ⊗_{s,p} R_y(f_{s,p}·θ^{(k)}_{s,p})|0⟩ over the buffer in (s, p) order; when
/// phases are present, last-level slots carry e^{iφ_{2p}}cos|0⟩ + e^{iφ_{2p+1}}sin|1⟩.
pub fn loadf_oracle(angles: &CspAngleSet, k: usize, flags: &[bool]) -> Vec<Complex64> {
    let levels = angles.n() - angles.m();
    let mut v = vec![Complex64::new(1.0, 0.0)];
    let mut b = 0;
    for s in 0..levels {
        for p in 0..1usize << s {
            let slot = if !flags[b] {
                KET0
            } else {
                let [c0, c1] = ry_state(angles.get(k, s, p));
                if angles.phases().is_some() && s + 1 == levels {
                    [
                        c0 * Complex64::from_polar(1.0, angles.phase(k, 2 * p)),
                        c1 * Complex64::from_polar(1.0, angles.phase(k, 2 * p + 1)),
                    ]
                } else {
                    [c0, c1]
                }
            };
            v = kron(&v, slot);
            b += 1;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::{build_angle_tree, sp_angles};

    #[test]
    fn flag_examples() {
        for m in 1..5 {
            let f = flag_oracle(0, m);
            assert!(f.iter().all(|row| row[0] && row[1..].iter().all(|b| !b)));
            for j in 0..1usize << m {
                assert!(flag_oracle(j, m).iter().all(|row| row.iter().filter(|b| **b).count() == 1));
            }
        }
        // j = 5 = 101b at m = 3: prefixes "", "1", "10"
        let f = flag_oracle(5, 3);
        assert!(f[0][0] && f[1][1] && f[2][2]);
    }

    #[test]
    fn spf_small_cases() {
        let y = PartitionNorms::from_values(vec![0.6, 0.8]).unwrap();
        let a = sp_angles(&build_angle_tree(y.values()).unwrap());
        let v = spf_oracle(&y, &a);
        assert_eq!(v.len(), 4);
        assert!((v[0].re - 0.6).abs() < 1e-15 && (v[2].re - 0.8).abs() < 1e-15);
        let y = PartitionNorms::from_values(vec![0.5; 4]).unwrap();
        let a = sp_angles(&build_angle_tree(y.values()).unwrap());
        let v = spf_oracle(&y, &a);
        // j = 0: slots (0,0) and (1,0) on path, (1,1) keeps |π/2⟩
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0b00_000].re - 0.5 * h).abs() < 1e-15);
        assert!((v[0b00_001].re - 0.5 * h).abs() < 1e-15);
        let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }
}
