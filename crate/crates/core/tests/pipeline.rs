use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsprep::amplitudes::{make_real_target, make_target, TargetState};
use qsprep::circuit::{expand, from_json, spacetime_allocation, to_json, Circuit, ExpandTarget, GateSetModel};
use qsprep::multicopy::{stack, BatchPlan};
use qsprep::protocols::{reflection, spcsp, ProtocolConfig};
use qsprep::sim::{run, SimOptions};
use qsprep::subroutines::{fragment_circuit, FragmentAngles, FRAGMENTS};

fn real_target(seed: u64, n: usize) -> TargetState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    make_real_target(&(0..1 << n).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<f64>>()).unwrap()
}

fn final_data(c: &Circuit) -> Vec<Complex64> {
    let out = run(c, &SimOptions::default()).unwrap();
    assert!(out.report.all_clean());
    out.state.dense(c.register("D").unwrap()).unwrap()
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

#[test]
fn built_circuits_validate() {
    let t = real_target(1, 5);
    let cfg = ProtocolConfig::default().with_m(3);
    let mut circuits = vec![spcsp(&t, &cfg).unwrap(), reflection(&real_target(2, 3), &ProtocolConfig::default()).unwrap()];
    for name in FRAGMENTS {
        if name != "loadf" {
            circuits.push(fragment_circuit(name, 3, FragmentAngles::None).unwrap());
        }
    }
    for c in &circuits {
        let v = c.validate();
        assert!(v.is_empty(), "{v:?}");
    }
}

#[test]
fn json_round_trip_preserves_behaviour_and_bytes() {
    let t = real_target(3, 4);
    let c = spcsp(&t, &ProtocolConfig::default()).unwrap();
    let text = to_json(&c);
    let back = from_json(&text).unwrap();
    assert_eq!(to_json(&back), text);
    assert_eq!(back.depth(), c.depth());
    assert!(close(&final_data(&back), &final_data(&c), 1e-12));
}

#[test]
fn expansion_preserves_prepared_state() {
    let t = real_target(4, 4);
    let c = spcsp(&t, &ProtocolConfig::default().with_m(2)).unwrap();
    let reference = final_data(&c);
    assert!(close(&reference, t.amplitudes(), 1e-9));
    for target in [ExpandTarget::U2Cnot, ExpandTarget::HstCnot] {
        let e = expand(&c, target).unwrap();
        assert!(e.depth() > c.depth());
        assert!(close(&final_data(&e), &reference, 1e-9), "{target:?}");
    }
}

#[test]
fn complex_target_with_dirty_b1_and_first_loadf_optimized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let amps: Vec<Complex64> = (0..16).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let t = make_target(&amps).unwrap();
    let cfg = ProtocolConfig { dirty_b1: true, loadf_first_optimized: true, ..ProtocolConfig::default().complex().with_m(2) };
    let c = spcsp(&t, &cfg).unwrap();
    assert!(close(&final_data(&c), t.amplitudes(), 1e-9));
}

#[test]
fn batch_resources_track_single_instances() {
    let targets: Vec<TargetState> = (0..3).map(|k| real_target(10 + k, 3)).collect();
    let batch = stack(&BatchPlan::new(targets), &ProtocolConfig::default()).unwrap();
    let single = spcsp(&real_target(10, 3), &ProtocolConfig::default().with_m(batch.report.m)).unwrap();
    let one = spacetime_allocation(&single, &GateSetModel::exact()).unwrap();
    assert_eq!(batch.report.single_depth, one.depth);
    assert!(batch.report.resources.size >= 3 * one.size);
    assert!(batch.report.resources.depth >= one.depth);
}
