use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use qsprep::amplitudes::{csp_angles, make_target, parse_amplitude_json, sp_angles, build_angle_tree, AmplitudeError, TargetState};
use qsprep::circuit::{
    expand, from_json, profile, ancilla_profile, spacetime_allocation, to_json, Circuit, CircuitError, ExpandTarget, GateSetModel, QubitId,
};
use qsprep::multicopy::{stack, BatchPlan, MulticopyError};
use qsprep::protocols::{spcsp, ProtocolConfig, ProtocolError};
use qsprep::sim::{flag_oracle, run, DirtySeeds, SimError, SimOptions};
use qsprep::subroutines::{fragment_circuit, FragmentAngles, FragmentError};

#[derive(Parser)]
#[command(name = "qsprep", version, about = "Low-depth state preparation circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GateSet {
    U2cnot,
    Hstcnot,
}

impl From<GateSet> for ExpandTarget {
    fn from(g: GateSet) -> Self {
        match g {
            GateSet::U2cnot => ExpandTarget::U2Cnot,
            GateSet::Hstcnot => ExpandTarget::HstCnot,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile an amplitude vector into a circuit and report its resources.
    Synth(SynthArgs),
    /// Simulate a circuit, checking every deallocation.
    Simulate(SimulateArgs),
    /// Report resources and write the per-layer live-qubit histogram as CSV.
    Profile(ProfileArgs),
    /// Stack several preparations with ancilla reuse.
    Multicopy(MulticopyArgs),
    /// Emit a single building block as a standalone circuit.
    Fragment(FragmentArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Circuit JSON destination; the circuit is embedded in the report otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long)]
    complex: bool,
    #[arg(long = "dirty-b1")]
    dirty_b1: bool,
    #[arg(long)]
    gateset: Option<GateSet>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Amplitude JSON to compare the data register against.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Run every basis input of a fragment circuit against its oracle.
    #[arg(long = "enumerate-basis")]
    enumerate_basis: bool,
    /// Seed random product states into dirty qubits.
    #[arg(long = "dirty-seed")]
    dirty_seed: Option<u64>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// CSV destination for the histogram.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long)]
    gateset: Option<GateSet>,
}

#[derive(Args)]
struct MulticopyArgs {
    /// JSON list of amplitude vectors, or {"targets": [...]}.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of copies; defaults to the number of vectors given.
    #[arg(long)]
    w: Option<usize>,
    /// Ancilla pool, as a count or a multiple of N such as "8N".
    #[arg(long)]
    pool: Option<String>,
    #[arg(long)]
    indent: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
}

#[derive(Args)]
struct FragmentArgs {
    /// One of copy, cs, copyswap, spf, flag, loadf.
    name: String,
    #[arg(long)]
    m: usize,
    /// Amplitudes for the angles of spf (2^m entries) or loadf (any n > m).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn input(kind: &'static str, message: impl ToString) -> Self {
        CliError { code: 2, kind, message: message.to_string() }
    }

    fn internal(kind: &'static str, message: impl ToString) -> Self {
        CliError { code: 3, kind, message: message.to_string() }
    }
}

impl From<AmplitudeError> for CliError {
    fn from(e: AmplitudeError) -> Self {
        CliError::input("amplitudes", e)
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::internal("circuit", e)
    }
}

impl From<FragmentError> for CliError {
    fn from(e: FragmentError) -> Self {
        match e {
            FragmentError::Schedule(_) => CliError::internal("fragment", e),
            FragmentError::Circuit(c) => c.into(),
            other => CliError::input("fragment", other),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Amplitude(a) => a.into(),
            ProtocolError::Fragment(f) => f.into(),
            ProtocolError::Circuit(c) => c.into(),
            other => CliError::input("config", other),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::BadInput(_) | SimError::PeakQubitsExceeded { .. } => CliError::input("simulation", e),
            other => CliError::internal("simulation", other),
        }
    }
}

impl From<MulticopyError> for CliError {
    fn from(e: MulticopyError) -> Self {
        match e {
            MulticopyError::Protocol(p) => p.into(),
            MulticopyError::Circuit(c) => c.into(),
            other => CliError::input("multicopy", other),
        }
    }
}

fn read_input(path: &Path) -> Result<(String, String), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::input("io", format!("{}: {e}", path.display())))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| CliError::input("io", e))?;
    Ok((text, digest))
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::input("io", format!("{}: {e}", path.display())))
}

fn read_circuit(path: &Path) -> Result<(Circuit, String), CliError> {
    let (text, digest) = read_input(path)?;
    let c = from_json(&text).map_err(|e| CliError::input("circuit", e))?;
    Ok((c, digest))
}

fn read_target(path: &Path) -> Result<(TargetState, String), CliError> {
    let (text, digest) = read_input(path)?;
    Ok((make_target(&parse_amplitude_json(&text)?)?, digest))
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a [String],
    input_digest: String,
    #[serde(flatten)]
    payload: Value,
}

fn emit(args: &[String], digest: String, payload: Value) {
    let env = Envelope { tool: "qsprep", version: env!("CARGO_PKG_VERSION"), command: args, input_digest: digest, payload };
    print_line(&serde_json::to_string_pretty(&env).expect("report serializes"));
}

// A closed pipe downstream (e.g. `| head`) is not an error worth reporting.
fn print_line(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn maybe_expand(c: Circuit, gateset: Option<GateSet>) -> Result<Circuit, CliError> {
    match gateset {
        Some(g) => Ok(expand(&c, g.into())?),
        None => Ok(c),
    }
}

fn cmd_synth(a: &SynthArgs, argv: &[String]) -> Result<(), CliError> {
    let (target, digest) = read_target(&a.input)?;
    let cfg = ProtocolConfig { m: a.m, epsilon: a.epsilon, complex_mode: a.complex, dirty_b1: a.dirty_b1, loadf_first_optimized: false };
    let c = maybe_expand(spcsp(&target, &cfg)?, a.gateset)?;
    let report = spacetime_allocation(&c, &GateSetModel::approximate(a.epsilon))?;
    let circuit_json = to_json(&c);
    let mut payload = json!({ "report": report });
    match &a.out {
        Some(path) => write_output(path, &circuit_json)?,
        None => payload["circuit"] = serde_json::from_str(&circuit_json).expect("valid json"),
    }
    emit(argv, digest, payload);
    Ok(())
}

/// Data qubits: the register named D, or every persistent qubit in id order.
fn data_qubits(c: &Circuit) -> Vec<QubitId> {
    c.register("D").map(<[QubitId]>::to_vec).unwrap_or_else(|| c.persistent_qubits())
}

fn basis(bits: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << bits];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

fn is_basis(v: &[Complex64], index: usize) -> bool {
    (v[index].norm() - 1.0).abs() < 1e-9
}

fn enumerate_basis(c: &Circuit, opts: &SimOptions) -> Result<Value, CliError> {
    let name = c.meta().get("fragment").and_then(Value::as_str).unwrap_or_default().to_string();
    let m = c.meta_usize("m").unwrap_or(0);
    let reg = |n: &str| c.register(n).map(<[QubitId]>::to_vec).ok_or_else(|| CliError::input("circuit", format!("missing register {n}")));
    let mut mismatches = Vec::new();
    let total;
    match name.as_str() {
        "flag" => {
            let (d, f) = (reg("D")?, reg("F")?);
            total = 1usize << m;
            for j in 0..total {
                let out = run(c, &opts.clone().with_input(d.clone(), basis(m, j)))?;
                let want = flag_oracle(j, m).concat().iter().fold(0usize, |acc, &on| (acc << 1) | usize::from(!on));
                if !is_basis(&out.state.dense(&f)?, want) {
                    mismatches.push(j);
                }
            }
        }
        "copy" => {
            let d = reg("D")?;
            total = 2;
            for b in 0..2 {
                let out = run(c, &opts.clone().with_input(vec![d[0]], basis(1, b)))?;
                if !is_basis(&out.state.dense(&d)?, if b == 1 { (1 << d.len()) - 1 } else { 0 }) {
                    mismatches.push(b);
                }
            }
        }
        "copyswap" => {
            let (d, a) = (reg("D")?, reg("A")?);
            total = 1usize << m;
            for k in 0..total {
                let lsb_first: usize = (0..m).map(|i| ((k >> i) & 1) << (m - 1 - i)).sum();
                let o = opts.clone().with_input(d.clone(), basis(m, lsb_first)).with_input(vec![a[0]], basis(1, 1));
                let out = run(c, &o)?;
                if !is_basis(&out.state.dense(&a)?, 1 << (a.len() - 1 - k)) {
                    mismatches.push(k);
                }
            }
        }
        other => return Err(CliError::input("enumerate", format!("no basis oracle for fragment {other:?}"))),
    }
    Ok(json!({ "fragment": name, "matches": total - mismatches.len(), "total": total, "mismatches": mismatches }))
}

fn cmd_simulate(a: &SimulateArgs, argv: &[String]) -> Result<(), CliError> {
    let (c, digest) = read_circuit(&a.input)?;
    let mut opts = SimOptions::default();
    if let Some(seed) = a.dirty_seed {
        opts.dirty_seeds = DirtySeeds::RandomProduct(seed);
    }
    if a.enumerate_basis {
        let result = enumerate_basis(&c, &opts)?;
        let failed = result["matches"] != result["total"];
        emit(argv, digest, json!({ "enumeration": result }));
        if failed {
            return Err(CliError::internal("enumerate", "fragment disagrees with its oracle"));
        }
        return Ok(());
    }
    let out = run(&c, &opts)?;
    let mut report = out.report;
    if let Some(path) = &a.target {
        let (t, _) = read_target(path)?;
        let qs = data_qubits(&c);
        if qs.len() != t.n() {
            return Err(CliError::input("target", format!("target has {} qubits, circuit data register has {}", t.n(), qs.len())));
        }
        report.fidelity = Some(out.state.fidelity(&qs, t.amplitudes())?);
    }
    emit(argv, digest, json!({ "simulation": report }));
    Ok(())
}

fn cmd_profile(a: &ProfileArgs, argv: &[String]) -> Result<(), CliError> {
    let (c, digest) = read_circuit(&a.input)?;
    let c = maybe_expand(c, a.gateset)?;
    let report = spacetime_allocation(&c, &GateSetModel::approximate(a.epsilon))?;
    let live = profile(&c)?;
    let anc = ancilla_profile(&c)?;
    let mut csv = String::from("layer,live,ancilla\n");
    for (i, (l, x)) in live.iter().zip(&anc).enumerate() {
        csv.push_str(&format!("{i},{l},{x}\n"));
    }
    let mut payload = json!({ "report": report });
    match &a.out {
        Some(path) => write_output(path, &csv)?,
        None => payload["histogram_csv"] = Value::String(csv),
    }
    emit(argv, digest, payload);
    Ok(())
}

fn parse_pool(text: &str, n: usize) -> Result<usize, CliError> {
    let t = text.trim();
    let bad = || CliError::input("pool", format!("cannot read pool {text:?}; use a count or a multiple like 8N"));
    match t.strip_suffix(['N', 'n']) {
        Some("") => Ok(1 << n),
        Some(k) => k.trim().parse::<usize>().map(|k| k << n).map_err(|_| bad()),
        None => t.parse().map_err(|_| bad()),
    }
}

fn cmd_multicopy(a: &MulticopyArgs, argv: &[String]) -> Result<(), CliError> {
    let (text, digest) = read_input(&a.input)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::input("json", e))?;
    let list = match &doc {
        Value::Array(v) => v.clone(),
        Value::Object(o) => o.get("targets").and_then(Value::as_array).cloned().ok_or_else(|| CliError::input("json", "expected a \"targets\" list"))?,
        _ => return Err(CliError::input("json", "expected a list of amplitude vectors")),
    };
    let mut targets = Vec::with_capacity(list.len());
    for entry in list {
        let wrapped = match entry {
            Value::Array(_) => json!({ "amplitudes": entry }),
            other => other,
        };
        targets.push(make_target(&parse_amplitude_json(&wrapped.to_string())?)?);
    }
    if let Some(w) = a.w {
        if w == 0 || w > targets.len() {
            return Err(CliError::input("multicopy", format!("--w {w} but {} vectors given", targets.len())));
        }
        targets.truncate(w);
    }
    let n = targets.first().map(TargetState::n).ok_or_else(|| CliError::input("multicopy", "no targets"))?;
    let pool_cap = a.pool.as_deref().map(|p| parse_pool(p, n)).transpose()?;
    let plan = BatchPlan { targets, indentation: a.indent, pool_cap };
    let cfg = ProtocolConfig { epsilon: a.epsilon, ..ProtocolConfig::default() };
    let batch = stack(&plan, &cfg)?;
    let circuit_json = to_json(&batch.circuit);
    let mut payload = json!({ "batch": batch.report });
    match &a.out {
        Some(path) => write_output(path, &circuit_json)?,
        None => payload["circuit"] = serde_json::from_str(&circuit_json).expect("valid json"),
    }
    emit(argv, digest, payload);
    Ok(())
}

fn cmd_fragment(a: &FragmentArgs, argv: &[String]) -> Result<(), CliError> {
    let (target, digest) = match &a.input {
        Some(p) => {
            let (t, d) = read_target(p)?;
            (Some(t), d)
        }
        None => (None, hex::encode(Sha256::digest(b""))),
    };
    let c = match (a.name.as_str(), &target) {
        ("spf", Some(t)) => {
            if t.n() != a.m {
                return Err(CliError::input("fragment", format!("spf --m {} needs 2^{} amplitudes", a.m, a.m)));
            }
            let angles = sp_angles(&build_angle_tree(&t.magnitudes())?);
            fragment_circuit("spf", a.m, FragmentAngles::Sp(&angles))?
        }
        ("loadf", Some(t)) => {
            let angles = csp_angles(t, a.m, !t.is_real_nonnegative())?;
            fragment_circuit("loadf", a.m, FragmentAngles::Csp(&angles))?
        }
        ("loadf", None) => return Err(CliError::input("fragment", "loadf needs --in amplitudes")),
        (name, _) => fragment_circuit(name, a.m, FragmentAngles::None)?,
    };
    let text = to_json(&c);
    match &a.out {
        Some(path) => {
            write_output(path, &text)?;
            emit(argv, digest, json!({ "fragment": a.name, "written": path }));
        }
        None => print_line(&text),
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a, &argv),
        Command::Simulate(a) => cmd_simulate(a, &argv),
        Command::Profile(a) => cmd_profile(a, &argv),
        Command::Multicopy(a) => cmd_multicopy(a, &argv),
        Command::Fragment(a) => cmd_fragment(a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = json!({ "error": { "kind": e.kind, "message": e.message, "exit_code": e.code } });
            eprintln!("{obj}");
            ExitCode::from(e.code)
        }
    }
}
