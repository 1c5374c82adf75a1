use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::amplitudes::{build_angle_tree, csp_angles, make_target, sp_angles, PartitionNorms};
use crate::circuit::{spacetime_allocation, GateSetModel};
use crate::sim::{flag_oracle, loadf_oracle, run, spf_oracle, SimOptions};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn basis(bits: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0); 1 << bits];
    v[index] = c(1.0);
    v
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_qubit(rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let ph: f64 = rng.gen_range(-3.0..3.0);
    vec![c((t / 2.0).cos()), Complex64::from_polar((t / 2.0).sin(), ph)]
}

#[test]
fn copy_depth_and_allocation() {
    for m in 1..=5 {
        let circ = fragment_circuit("copy", m, FragmentAngles::None).unwrap();
        let cc = 1u64 << m;
        let r = spacetime_allocation(&circ, &GateSetModel::exact()).unwrap();
        assert_eq!(circ.depth(), m);
        assert_eq!(r.sa_exact, 2 * cc - 2);
    }
}

#[test]
fn copy_produces_cat_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let circ = fragment_circuit("copy", 3, FragmentAngles::None).unwrap();
    let reg = circ.register("D").unwrap().to_vec();
    let psi = random_qubit(&mut rng);
    let out = run(&circ, &SimOptions::default().with_input(vec![reg[0]], psi.clone())).unwrap();
    let d = out.state.dense(&reg).unwrap();
    let mut want = vec![c(0.0); 256];
    want[0] = psi[0];
    want[255] = psi[1];
    assert!(max_diff(&d, &want) < 1e-12);
}

#[test]
fn fanout_handles_any_count() {
    for count in 0..9 {
        let mut p = Program::new();
        let src = p.persistent();
        let t = p.persistent_n(count);
        fanout(&mut p, src, &t);
        let circ = p.to_circuit(Placement::Asap).unwrap();
        let expect_depth = if count == 0 { 0 } else { (usize::BITS - count.leading_zeros()) as usize };
        assert_eq!(circ.depth(), expect_depth, "count {count}");
        let mut all = vec![src];
        all.extend(&t);
        let out = run(&circ, &SimOptions::default().with_input(vec![src], vec![c(0.0), c(1.0)])).unwrap();
        let d = out.state.dense(&all).unwrap();
        assert!((d[(1 << all.len()) - 1] - c(1.0)).norm() < 1e-12);
    }
}

#[test]
fn cs_layer_swaps_halves_when_controls_set() {
    let circ = fragment_circuit("cs", 1, FragmentAngles::None).unwrap();
    let r = circ.register("R").unwrap().to_vec();
    let s = circ.register("S").unwrap().to_vec();
    assert_eq!(circ.depth(), 1);
    let opts = SimOptions::default().with_input(r.clone(), basis(2, 0b10)).with_input(s.clone(), basis(4, 0b1100));
    let out = run(&circ, &opts).unwrap();
    // Only control 0 is set, so S_0 ↔ S_2 while S_1, S_3 stay.
    assert!((out.state.dense(&s).unwrap()[0b0110] - c(1.0)).norm() < 1e-12);
}

#[test]
fn copyswap_routes_root_to_slot_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in 1..=3 {
        let circ = fragment_circuit("copyswap", m, FragmentAngles::None).unwrap();
        assert_eq!(circ.depth(), m);
        let d = circ.register("D").unwrap().to_vec();
        let a = circ.register("A").unwrap().to_vec();
        for k in 0..1usize << m {
            let psi = random_qubit(&mut rng);
            // bits are least significant first, the dense input is most significant first
            let rev: usize = (0..m).map(|i| ((k >> i) & 1) << (m - 1 - i)).sum();
            let opts = SimOptions::default().with_input(d.clone(), basis(m, rev)).with_input(vec![a[0]], psi.clone());
            let out = run(&circ, &opts).unwrap();
            let got = out.state.dense(&a).unwrap();
            let big = 1usize << m;
            let mut want = vec![c(0.0); 1 << big];
            want[0] = psi[0];
            want[1 << (big - 1 - k)] = psi[1];
            assert!(max_diff(&got, &want) < 1e-12, "m={m} k={k}");
        }
    }
}

#[test]
fn copyswap_allocation_measured() {
    for m in 1..=6 {
        let circ = fragment_circuit("copyswap", m, FragmentAngles::None).unwrap();
        let r = spacetime_allocation(&circ, &GateSetModel::exact()).unwrap();
        assert_eq!(circ.depth(), m);
        // bits and target slot 0 live all m layers; target slots [2ᵗ, 2ᵗ⁺¹) and
        // 2ᵗ copies of every bit above t are first touched in layer t
        let lifespan = |t: usize| (m - t) as u64;
        let fixed = (m as u64) * (m as u64 + 1) + (0..m).map(|t| (1u64 << t) * lifespan(t)).sum::<u64>();
        let copies: u64 = (1..m).map(|i| (0..i).map(|t| (1u64 << t) * lifespan(t)).sum::<u64>()).sum();
        assert_eq!(r.sa_exact, fixed + copies, "m={m}");
    }
}

#[test]
fn spf_schedule_obeys_rules() {
    for m in 1..=12 {
        let ops = spf_schedule(m);
        assert!(check_spf_rules(m, &ops).is_empty(), "m={m}: {:?}", check_spf_rules(m, &ops));
        let cs = ops.iter().filter(|o| matches!(o, SpfOp::Cs { .. })).count();
        assert_eq!(cs, m * (m - 1) / 2);
    }
}

#[test]
fn spf_rule_checker_catches_reordering() {
    let mut ops = spf_schedule(5);
    let swap1 = ops.iter().position(|o| *o == SpfOp::Swap { q: 1 }).unwrap();
    let op = ops.remove(swap1);
    ops.insert(0, op);
    assert!(!check_spf_rules(5, &ops).is_empty());
}

#[test]
fn spf_depth_is_linear() {
    let depths: Vec<usize> = (2..=7)
        .map(|m| fragment_circuit("spf", m, FragmentAngles::None).unwrap().depth())
        .collect();
    for (i, d) in depths.iter().enumerate() {
        assert!(*d <= 8 * (i + 2), "m={} depth={d}", i + 2);
    }
}

#[test]
fn spf_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in 1..=4 {
        for _ in 0..5 {
            let y: Vec<f64> = (0..1 << m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let pn = PartitionNorms::from_values(y.clone()).unwrap();
            let angles = sp_angles(&build_angle_tree(&y).unwrap());
            let circ = fragment_circuit("spf", m, FragmentAngles::Sp(&angles)).unwrap();
            let mut qs = circ.register("D").unwrap().to_vec();
            qs.extend(circ.register("A").unwrap());
            let out = run(&circ, &SimOptions::default()).unwrap();
            assert!(out.report.all_clean());
            let got = out.state.dense(&qs).unwrap();
            assert!(max_diff(&got, &spf_oracle(&pn, &angles)) < 1e-10, "m={m}");
        }
    }
}

#[test]
fn flag_is_exhaustively_correct() {
    for m in 1..=4 {
        let circ = fragment_circuit("flag", m, FragmentAngles::None).unwrap();
        let d = circ.register("D").unwrap().to_vec();
        let f = circ.register("F").unwrap().to_vec();
        for j in 0..1usize << m {
            let out = run(&circ, &SimOptions::default().with_input(d.clone(), basis(m, j))).unwrap();
            let expect: Vec<bool> = flag_oracle(j, m).concat();
            let idx: usize = expect.iter().fold(0, |acc, &on| (acc << 1) | usize::from(!on));
            let got = out.state.dense(&f).unwrap();
            assert!((got[idx] - c(1.0)).norm() < 1e-12, "m={m} j={j}");
            assert!((out.state.dense(&d).unwrap()[j] - c(1.0)).norm() < 1e-12);
        }
    }
}

fn loadf_case(n: usize, m: usize, complex: bool, opts: LoadfOptions, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex64> = (0..1 << n)
        .map(|_| {
            let mag: f64 = rng.gen_range(0.05..1.0);
            if complex {
                Complex64::from_polar(mag, rng.gen_range(-3.0..3.0))
            } else {
                c(mag)
            }
        })
        .collect();
    let target = make_target(&raw).unwrap();
    let angles = csp_angles(&target, m, complex).unwrap();
    let nt = (1usize << (n - m)) - 1;
    for k in 0..1usize << m {
        let flags: Vec<bool> = if opts.unflagged { vec![true; nt] } else { (0..nt).map(|_| rng.gen_bool(0.5)).collect() };
        let mut p = Program::new();
        let ctrl = p.persistent_n(m);
        let b0 = p.persistent_n(nt);
        let f0 = p.persistent_n(nt);
        loadf(&mut p, &ctrl, &b0, &f0, &angles, opts).unwrap();
        let circ = p.to_circuit(Placement::Asap).unwrap();
        let fidx = flags.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b));
        let sim_opts = SimOptions::default()
            .with_input(ctrl.clone(), basis(m, k))
            .with_input(f0.clone(), basis(nt, fidx))
            .with_dirty(crate::sim::DirtySeeds::RandomProduct(seed + k as u64));
        let out = run(&circ, &sim_opts).unwrap();
        assert!(out.report.all_clean());
        let got = out.state.dense(&b0).unwrap();
        let want = loadf_oracle(&angles, k, &flags);
        assert!(max_diff(&got, &want) < 1e-10, "n={n} m={m} k={k} complex={complex}");
    }
}

#[test]
fn loadf_matches_oracle_real() {
    loadf_case(3, 1, false, LoadfOptions::default(), 1);
    loadf_case(4, 2, false, LoadfOptions::default(), 2);
    loadf_case(4, 1, false, LoadfOptions::default(), 3);
}

#[test]
fn loadf_matches_oracle_complex() {
    loadf_case(3, 1, true, LoadfOptions::default(), 4);
    loadf_case(4, 2, true, LoadfOptions::default(), 5);
}

#[test]
fn loadf_variants() {
    loadf_case(4, 2, false, LoadfOptions { dirty_b1: true, unflagged: false }, 6);
    loadf_case(3, 1, true, LoadfOptions { dirty_b1: false, unflagged: true }, 7);
}

#[test]
fn loadf_registers_have_expected_sizes() {
    let (n, m) = (5, 2);
    let raw: Vec<Complex64> = (0..1 << n).map(|i| c(1.0 + i as f64)).collect();
    let angles = csp_angles(&make_target(&raw).unwrap(), m, false).unwrap();
    let circ = fragment_circuit("loadf", m, FragmentAngles::Csp(&angles)).unwrap();
    for name in ["D1", "D2", "D3", "A0", "A1", "A2", "B1", "F1", "B0", "F0"] {
        let got = circ.register(name).unwrap().len();
        assert_eq!(Some(got), crate::circuit::expected_register_size(name, n, m), "{name}");
    }
}

#[test]
fn loadf_adjoint_undoes_loadf() {
    let (n, m) = (4, 2);
    let raw: Vec<Complex64> = (0..1 << n).map(|i| Complex64::from_polar(1.0 + i as f64, i as f64)).collect();
    let angles = csp_angles(&make_target(&raw).unwrap(), m, true).unwrap();
    let nt = 3;
    let mut p = Program::new();
    let ctrl = p.persistent_n(m);
    let b0 = p.persistent_n(nt);
    let f0 = p.persistent_n(nt);
    loadf(&mut p, &ctrl, &b0, &f0, &angles, LoadfOptions::default()).unwrap();
    loadf_adjoint(&mut p, &ctrl, &b0, &f0, &angles, LoadfOptions::default()).unwrap();
    let circ = p.to_circuit(Placement::Asap).unwrap();
    let opts = SimOptions::default().with_input(ctrl.clone(), basis(m, 2)).with_input(f0.clone(), basis(nt, 0b111));
    let out = run(&circ, &opts).unwrap();
    assert!((out.state.dense(&b0).unwrap()[0] - c(1.0)).norm() < 1e-10);
}
