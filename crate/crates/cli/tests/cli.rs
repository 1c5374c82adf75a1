use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qsprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsprep")).args(args).output().expect("binary runs")
}

fn qsprep_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsprep")).args(args).env(key, val).output().expect("binary runs")
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "exit {:?}, stderr: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const RAND_N4: &str = r#"{"amplitudes":[0.31,0.12,0.05,0.44,0.27,0.09,0.18,0.36,0.22,0.41,0.07,0.15,0.29,0.33,0.11,0.24]}"#;

#[test]
fn profile_of_copy8_reports_sa_14_and_histogram() {
    let dir = TempDir::new().unwrap();
    let circ = dir.path().join("copy8.json");
    let csv = dir.path().join("hist.csv");
    ok_json(&qsprep(&["fragment", "copy", "--m", "3", "--out", s(&circ)]));
    let env = ok_json(&qsprep(&["profile", "--in", s(&circ), "--out", s(&csv)]));
    assert_eq!(env["report"]["sa_exact"], 14);
    assert_eq!(env["report"]["depth"], 3);

    let hist = fs::read_to_string(&csv).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next(), Some("layer,live,ancilla"));
    let rows: Vec<Vec<usize>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(!rows.is_empty());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i);
        assert!(r[2] <= r[1]);
    }
    assert_eq!(rows.iter().map(|r| r[1]).max(), Some(8));
}

#[test]
fn flag_fragment_enumerates_all_basis_inputs() {
    let dir = TempDir::new().unwrap();
    let circ = dir.path().join("flag.json");
    ok_json(&qsprep(&["fragment", "flag", "--m", "3", "--out", s(&circ)]));
    let env = ok_json(&qsprep(&["simulate", "--in", s(&circ), "--enumerate-basis"]));
    assert_eq!(env["enumeration"]["matches"], 8);
    assert_eq!(env["enumeration"]["total"], 8);
}

#[test]
fn copyswap_fragment_enumerates_all_basis_inputs() {
    let dir = TempDir::new().unwrap();
    let circ = dir.path().join("cs.json");
    ok_json(&qsprep(&["fragment", "copyswap", "--m", "2", "--out", s(&circ)]));
    let env = ok_json(&qsprep(&["simulate", "--in", s(&circ), "--enumerate-basis"]));
    assert_eq!(env["enumeration"]["matches"], 4);
}

#[test]
fn basis_state_target_has_zero_rotation_parameters() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e0.json", r#"{"amplitudes":[1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}"#);
    let circ = dir.path().join("c.json");
    ok_json(&qsprep(&["synth", "--in", s(&input), "--out", s(&circ)]));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&circ).unwrap()).unwrap();
    let mut rotations = 0;
    for layer in doc["layers"].as_array().unwrap() {
        for g in layer.as_array().unwrap() {
            for p in g["params"].as_array().unwrap() {
                assert_eq!(p.as_f64().unwrap(), 0.0, "gate {g}");
                rotations += 1;
            }
        }
    }
    assert!(rotations > 0);
}

#[test]
fn small_epsilon_widens_sa() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "r.json", RAND_N4);
    let env = ok_json(&qsprep(&["synth", "--in", s(&input), "--epsilon", "1e-6"]));
    let r = &env["report"];
    assert!(r["sa_approx"].as_u64().unwrap() > r["sa_exact"].as_u64().unwrap());
}

#[test]
fn pixel_report_has_resource_fields() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "pixels.json", r#"{"amplitudes":[232,31,62,137]}"#);
    let env = ok_json(&qsprep(&["synth", "--in", s(&input), "--m", "2"]));
    for key in ["depth", "size", "sa_exact", "sa_approx", "qubit_count"] {
        assert!(env["report"][key].is_number(), "missing {key}");
    }
    assert_eq!(env["tool"], "qsprep");
    assert_eq!(env["input_digest"].as_str().unwrap().len(), 64);
    assert!(env["circuit"]["layers"].is_array());
}

#[test]
fn synth_then_simulate_reaches_target() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "r.json", RAND_N4);
    let circ = dir.path().join("c.json");
    ok_json(&qsprep(&["synth", "--in", s(&input), "--out", s(&circ)]));
    let env = ok_json(&qsprep(&["simulate", "--in", s(&circ), "--target", s(&input)]));
    assert!(env["simulation"]["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
}

#[test]
fn dirty_b1_round_trip_through_cli() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "r.json", RAND_N4);
    let circ = dir.path().join("c.json");
    ok_json(&qsprep(&["synth", "--in", s(&input), "--m", "2", "--dirty-b1", "--out", s(&circ)]));
    let env = ok_json(&qsprep(&["simulate", "--in", s(&circ), "--target", s(&input), "--dirty-seed", "11"]));
    assert!(env["simulation"]["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    assert!(!env["simulation"]["dirty_restoration"].as_array().unwrap().is_empty());
}

#[test]
fn complex_synthesis() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.json", r#"{"amplitudes":[[0.3,0.1],[0.0,-0.4],[0.2,0.2],[-0.5,0.1],[0.1,0.0],[0.3,-0.3],[0.0,0.2],[0.25,0.15]]}"#);
    let circ = dir.path().join("out.json");
    ok_json(&qsprep(&["synth", "--in", s(&input), "--complex", "--out", s(&circ)]));
    let env = ok_json(&qsprep(&["simulate", "--in", s(&circ), "--target", s(&input)]));
    assert!(env["simulation"]["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
}

#[test]
fn gateset_expansion_restricts_ops() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "r.json", RAND_N4);
    let circ = dir.path().join("h.json");
    ok_json(&qsprep(&["synth", "--in", s(&input), "--gateset", "hstcnot", "--out", s(&circ)]));
    let text = fs::read_to_string(&circ).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    for layer in doc["layers"].as_array().unwrap() {
        for g in layer.as_array().unwrap() {
            let op = g["op"].as_str().unwrap();
            assert!(["h", "s", "sdg", "t", "tdg", "x", "z", "cnot", "ry", "rz", "phase"].contains(&op), "{op}");
        }
    }
    let env = ok_json(&qsprep(&["simulate", "--in", s(&circ), "--target", s(&input)]));
    assert!(env["simulation"]["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
}

#[test]
fn circuit_json_round_trip_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "r.json", RAND_N4);
    let circ = dir.path().join("c.json");
    ok_json(&qsprep(&["synth", "--in", s(&input), "--out", s(&circ)]));
    let text = fs::read_to_string(&circ).unwrap();
    let parsed = qsprep::circuit::from_json(&text).unwrap();
    assert_eq!(qsprep::circuit::to_json(&parsed), text);
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "r.json", RAND_N4);
    let a = qsprep(&["synth", "--in", s(&input)]);
    let b = qsprep(&["synth", "--in", s(&input)]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn multicopy_with_pool_in_units_of_n() {
    let dir = TempDir::new().unwrap();
    let v = r#"{"amplitudes":[0.1,0.5,0.2,0.3,0.4,0.2,0.6,0.2]}"#;
    let input = write(&dir, "batch.json", &format!("[{v},{v},{v},{v}]"));
    let circ = dir.path().join("b.json");
    let env = ok_json(&qsprep(&["multicopy", "--in", s(&input), "--w", "4", "--pool", "8N", "--out", s(&circ)]));
    let b = &env["batch"];
    assert_eq!(b["w"], 4);
    assert_eq!(b["pool_cap"], 64);
    assert!(b["peak_ancillae"].as_u64().unwrap() <= 64);
    assert!(b["resources"]["depth"].as_u64().unwrap() < 4 * b["single_depth"].as_u64().unwrap());

    let bare = write(&dir, "bare.json", "[[0.1,0.5,0.2,0.3,0.4,0.2,0.6,0.2],[1,0,0,0,0,0,0,0]]");
    let env = ok_json(&qsprep(&["multicopy", "--in", s(&bare), "--indent", "6"]));
    assert_eq!(env["batch"]["w"], 2);
    assert_eq!(env["batch"]["indentation"], 6);
}

fn assert_input_error(out: &Output) {
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is a json error object");
    assert_eq!(err["error"]["exit_code"], 2);
    assert!(err["error"]["message"].is_string());
}

#[test]
fn validation_errors_exit_2_with_error_object() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "r.json", RAND_N4);
    assert_input_error(&qsprep(&["synth", "--in", s(&input), "--m", "9"]));
    assert_input_error(&qsprep(&["synth", "--in", s(&input), "--epsilon", "0"]));

    let bad = write(&dir, "bad.json", "not json");
    assert_input_error(&qsprep(&["synth", "--in", s(&bad)]));
    assert_input_error(&qsprep(&["simulate", "--in", s(&bad)]));

    let odd = write(&dir, "odd.json", r#"{"amplitudes":[1,2,3]}"#);
    assert_input_error(&qsprep(&["synth", "--in", s(&odd)]));

    let zero = write(&dir, "zero.json", r#"{"amplitudes":[0,0,0,0]}"#);
    assert_input_error(&qsprep(&["synth", "--in", s(&zero)]));

    assert_input_error(&qsprep(&["synth", "--in", s(&dir.path().join("missing.json"))]));
    assert_input_error(&qsprep(&["fragment", "flag", "--m", "0"]));
    assert_input_error(&qsprep(&["fragment", "copyswap", "--m", "0"]));
    assert_input_error(&qsprep(&["fragment", "nope", "--m", "2"]));
}

#[test]
fn qubit_cap_from_environment() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "r.json", RAND_N4);
    let circ = dir.path().join("c.json");
    ok_json(&qsprep(&["synth", "--in", s(&input), "--out", s(&circ)]));
    assert_input_error(&qsprep_env(&["simulate", "--in", s(&circ)], "QSPREP_MAX_QUBITS", "2"));
    ok_json(&qsprep_env(&["simulate", "--in", s(&circ)], "QSPREP_MAX_QUBITS", "20"));
}
