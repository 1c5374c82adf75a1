//! Stacking many preparations so that ancillae freed by one instance are
//! reused by the next.
//!
//! All SP stages run in parallel from layer 0. The CSP stage of instance d
//! starts d·k layers after the SP stages end, where k is the indentation.
//! Physical qubit ids are assigned greedily, lowest free id first, and an id
//! is reused only from the layer its previous lifetime was deallocated.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::amplitudes::TargetState;
use crate::circuit::{ancilla_profile, horizon, spacetime_allocation, Circuit, CircuitError, Gate, GateSetModel, Placement, QubitId, QubitKind, ResourceReport};
use crate::protocols::{prepare, ProtocolConfig, ProtocolError};

#[derive(Debug, Error)]
pub enum MulticopyError {
    #[error("batch needs at least one target")]
    Empty,
    #[error("targets mix qubit counts {0} and {1}")]
    MixedSizes(usize, usize),
    #[error("indentation must be at least 1")]
    ZeroIndent,
    #[error("peak of {peak} ancillae exceeds the pool of {cap} at k = {k}; smallest feasible k is {feasible:?}")]
    PoolExceeded { k: usize, peak: usize, cap: usize, feasible: Option<usize> },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Debug)]
pub struct BatchPlan {
    pub targets: Vec<TargetState>,
    /// Layers between successive CSP starts; the smallest feasible value when `None`.
    pub indentation: Option<usize>,
    /// Ancilla budget; 8·2ⁿ when `None`.
    pub pool_cap: Option<usize>,
}

impl BatchPlan {
    pub fn new(targets: Vec<TargetState>) -> Self {
        BatchPlan { targets, indentation: None, pool_cap: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchReport {
    pub w: usize,
    pub n: usize,
    pub m: usize,
    pub indentation: usize,
    pub pool_cap: usize,
    pub peak_ancillae: usize,
    pub single_depth: usize,
    pub resources: ResourceReport,
}

#[derive(Clone, Debug)]
pub struct Batch {
    pub circuit: Circuit,
    pub report: BatchReport,
    /// Data qubits of each instance in the batch circuit.
    pub data: Vec<Vec<QubitId>>,
}

/// SP split for multi-copy batches: m = n − ⌈log₂ n⌉, clamped into 1..n.
pub fn batch_split(n: usize) -> usize {
    let ceil_log = n.next_power_of_two().trailing_zeros() as usize;
    n.saturating_sub(ceil_log).clamp(1, n.saturating_sub(1).max(1))
}

/// One scheduled instance: its circuit and the layer where its CSP stage begins.
struct Instance {
    circuit: Circuit,
    data: Vec<QubitId>,
    csp_start: usize,
}

fn build_instance(t: &TargetState, cfg: &ProtocolConfig) -> Result<Instance, MulticopyError> {
    let n = t.n();
    let cfg = ProtocolConfig { m: Some(batch_split(n)), ..cfg.clone() };
    let prep = prepare(t, &cfg)?;
    let circuit = prep.program.to_circuit(Placement::Asap)?;
    let mut head = crate::circuit::Program::new();
    for ins in &prep.program.instrs()[..prep.sp_end] {
        head.push(ins.clone());
    }
    let csp_start = if prep.m < n { head.to_circuit(Placement::Asap)?.span() } else { horizon(&circuit) };
    Ok(Instance { circuit, data: prep.data, csp_start })
}

/// Layer shift for `layer` of instance d.
fn shift(layer: usize, csp_start: usize, d: usize, k: usize) -> usize {
    if layer < csp_start {
        layer
    } else {
        layer + d * k
    }
}

/// Peak ancilla count of w stacked copies of a single-instance profile.
fn stacked_peak(profile: &[usize], csp_start: usize, w: usize, k: usize) -> usize {
    let len = profile.len() + w.saturating_sub(1) * k;
    let mut total = vec![0usize; len + 1];
    for d in 0..w {
        for (l, &v) in profile.iter().enumerate() {
            total[shift(l, csp_start, d, k)] += v;
        }
    }
    total.into_iter().max().unwrap_or(0)
}

/// Smallest indentation k ≥ 1 whose stacked ancilla peak fits `pool_cap`,
/// scanning up to the length of one CSP stage (no CSP overlap at all).
pub fn min_indentation(n: usize, w: usize, pool_cap: usize, cfg: &ProtocolConfig) -> Result<usize, MulticopyError> {
    let t = crate::amplitudes::make_real_target(&vec![1.0; 1 << n]).map_err(ProtocolError::from)?;
    let inst = build_instance(&t, cfg)?;
    scan_indentation(&inst, w, pool_cap)
}

fn scan_indentation(inst: &Instance, w: usize, pool_cap: usize) -> Result<usize, MulticopyError> {
    let profile = ancilla_profile(&inst.circuit)?;
    let serial = profile.len().saturating_sub(inst.csp_start).max(1);
    for k in 1..=serial {
        if stacked_peak(&profile, inst.csp_start, w, k) <= pool_cap {
            return Ok(k);
        }
    }
    Err(MulticopyError::PoolExceeded { k: serial, peak: stacked_peak(&profile, inst.csp_start, w, serial), cap: pool_cap, feasible: None })
}

enum Event {
    Dealloc(QubitId),
    Alloc(QubitId, QubitKind, bool),
    Gate(Gate),
}

/// Builds the stacked batch circuit and its report.
pub fn stack(plan: &BatchPlan, cfg: &ProtocolConfig) -> Result<Batch, MulticopyError> {
    let first = plan.targets.first().ok_or(MulticopyError::Empty)?;
    let n = first.n();
    if let Some(t) = plan.targets.iter().find(|t| t.n() != n) {
        return Err(MulticopyError::MixedSizes(n, t.n()));
    }
    let w = plan.targets.len();
    let pool_cap = plan.pool_cap.unwrap_or(8 << n);
    let instances: Vec<Instance> = plan.targets.iter().map(|t| build_instance(t, cfg)).collect::<Result<_, _>>()?;
    let k = match plan.indentation {
        Some(0) => return Err(MulticopyError::ZeroIndent),
        Some(k) => {
            let profile = ancilla_profile(&instances[0].circuit)?;
            let peak = stacked_peak(&profile, instances[0].csp_start, w, k);
            if peak > pool_cap {
                let feasible = scan_indentation(&instances[0], w, pool_cap).ok();
                return Err(MulticopyError::PoolExceeded { k, peak, cap: pool_cap, feasible });
            }
            k
        }
        None => scan_indentation(&instances[0], w, pool_cap)?,
    };

    // Every lifetime of every instance becomes one interval on a physical id.
    struct Span {
        d: usize,
        q: QubitId,
        start: usize,
        end: Option<usize>,
        kind: QubitKind,
        persistent: bool,
    }
    let mut spans = Vec::new();
    for (d, inst) in instances.iter().enumerate() {
        for (q, l) in inst.circuit.all_lifetimes() {
            if l.dealloc == Some(l.alloc) {
                continue;
            }
            spans.push(Span {
                d,
                q,
                start: shift(l.alloc, inst.csp_start, d, k),
                end: l.dealloc.map(|e| shift(e, inst.csp_start, d, k)),
                kind: l.kind,
                persistent: l.persistent,
            });
        }
    }
    spans.sort_by_key(|s| (s.start, s.d, s.q));

    let mut free: BTreeSet<u32> = BTreeSet::new();
    let mut releases: BTreeSet<(usize, u32)> = BTreeSet::new();
    let mut next_id = 0u32;
    let mut lookup: HashMap<(usize, QubitId), Vec<(usize, Option<usize>, QubitId)>> = HashMap::new();
    let mut events: Vec<(usize, u8, Event)> = Vec::new();
    for s in &spans {
        while let Some(&(layer, id)) = releases.first() {
            if layer > s.start {
                break;
            }
            releases.pop_first();
            free.insert(id);
        }
        let id = match free.pop_first() {
            Some(id) => id,
            None => {
                next_id += 1;
                next_id - 1
            }
        };
        if let Some(e) = s.end {
            releases.insert((e, id));
            events.push((e, 0, Event::Dealloc(QubitId(id))));
        }
        events.push((s.start, 1, Event::Alloc(QubitId(id), s.kind, s.persistent)));
        lookup.entry((s.d, s.q)).or_default().push((s.start, s.end, QubitId(id)));
    }
    let phys = |d: usize, q: QubitId, layer: usize| -> QubitId {
        lookup[&(d, q)]
            .iter()
            .find(|(a, e, _)| *a <= layer && e.is_none_or(|e| layer < e))
            .map(|x| x.2)
            .expect("gate inside a lifetime")
    };
    for (d, inst) in instances.iter().enumerate() {
        for (layer, g) in inst.circuit.gates() {
            let at = shift(layer, inst.csp_start, d, k);
            let mut g = g.clone();
            for q in g.qubits.iter_mut() {
                *q = phys(d, *q, at);
            }
            events.push((at, 2, Event::Gate(g)));
        }
    }
    events.sort_by_key(|e| (e.0, e.1));

    let mut c = Circuit::new();
    for (layer, _, ev) in events {
        match ev {
            Event::Dealloc(q) => c.dealloc_at(q, layer)?,
            Event::Alloc(q, kind, persistent) => c.alloc_id_at(q, kind, persistent, layer)?,
            Event::Gate(g) => c.place_at(g, layer)?,
        }
    }
    let data: Vec<Vec<QubitId>> = instances
        .iter()
        .enumerate()
        .map(|(d, inst)| inst.data.iter().map(|&q| phys(d, q, usize::MAX - 1)).collect())
        .collect();
    for (d, ids) in data.iter().enumerate() {
        c.set_register(format!("copy{d}.D"), ids.clone());
    }
    c.set_meta("w", w.into());
    c.set_meta("n", n.into());
    c.set_meta("indentation", k.into());

    let peak_ancillae = ancilla_profile(&c)?.into_iter().max().unwrap_or(0);
    let resources = spacetime_allocation(&c, &GateSetModel::approximate(cfg.epsilon))?;
    let report = BatchReport {
        w,
        n,
        m: batch_split(n),
        indentation: k,
        pool_cap,
        peak_ancillae,
        single_depth: instances[0].circuit.depth(),
        resources,
    };
    Ok(Batch { circuit: c, report, data })
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::amplitudes::make_real_target;
    use crate::protocols::spcsp;
    use crate::sim::{run, SimOptions};

    fn targets(w: usize, n: usize, seed: u64) -> Vec<TargetState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..w)
            .map(|_| make_real_target(&(0..1 << n).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<f64>>()).unwrap())
            .collect()
    }

    #[test]
    fn single_copy_matches_spcsp() {
        let t = targets(1, 4, 1);
        let b = stack(&BatchPlan::new(t.clone()), &ProtocolConfig::default()).unwrap();
        let single = spcsp(&t[0], &ProtocolConfig::default().with_m(2)).unwrap();
        assert_eq!(b.circuit.depth(), single.depth());
        assert_eq!(b.circuit.size(), single.size());
        let exact = spacetime_allocation(&single, &GateSetModel::exact()).unwrap();
        assert_eq!(b.report.resources.sa_exact, exact.sa_exact);
    }

    #[test]
    fn unbounded_pool_gives_unit_indent() {
        assert_eq!(min_indentation(3, 4, usize::MAX, &ProtocolConfig::default()).unwrap(), 1);
    }

    #[test]
    fn tight_pool_is_rejected_with_hint() {
        let plan = BatchPlan { targets: targets(4, 3, 2), indentation: Some(1), pool_cap: Some(40) };
        match stack(&plan, &ProtocolConfig::default()) {
            Err(MulticopyError::PoolExceeded { feasible, .. }) => assert!(feasible.is_none_or(|k| k > 1)),
            other => panic!("expected PoolExceeded, got {other:?}"),
        }
    }

    #[test]
    fn batch_is_valid_and_correct() {
        let ts = targets(4, 3, 3);
        let b = stack(&BatchPlan::new(ts.clone()), &ProtocolConfig::default()).unwrap();
        assert!(b.circuit.validate().is_empty());
        assert!(b.report.peak_ancillae <= 64);
        assert!(b.report.resources.depth < 4 * b.report.single_depth);
        let out = run(&b.circuit, &SimOptions::default()).unwrap();
        assert!(out.report.all_clean());
        let groups: Vec<(Vec<QubitId>, Vec<Complex64>)> =
            b.data.iter().cloned().zip(ts.iter().map(|t| t.amplitudes().to_vec())).collect();
        assert!(out.state.fidelity_product(&groups).unwrap() >= 1.0 - 1e-8);
    }
}
