use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::state::{Handle, SparseState};
use super::SimError;
use crate::circuit::{horizon, Circuit, Lifetime, QubitId, QubitKind};
use crate::config::{max_qubits_from_env, Tolerances};

/// Initial states for dirty allocations.
#[derive(Clone, Debug, Default)]
pub enum DirtySeeds {
    /// Dirty qubits start in |0⟩.
    #[default]
    Zero,
    /// Independent uniformly random computational basis states.
    RandomBasis(u64),
    /// Independent random single-qubit pure states.
    RandomProduct(u64),
    /// Explicit per-qubit states; unlisted qubits start in |0⟩.
    Explicit(HashMap<QubitId, [Complex64; 2]>),
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    /// Cap on log₂ of any component's support.
    pub cap: usize,
    pub tolerances: Tolerances,
    pub dirty_seeds: DirtySeeds,
    /// Groups of qubits preloaded with dense states (first qubit most significant).
    pub inputs: Vec<(Vec<QubitId>, Vec<Complex64>)>,
    /// Fail on the first dealloc verdict that exceeds tolerance.
    pub strict: bool,
    /// Ignore deallocations: every lifetime keeps its own simulated qubit.
    pub static_mode: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            cap: max_qubits_from_env(),
            tolerances: Tolerances::DEFAULT,
            dirty_seeds: DirtySeeds::Zero,
            inputs: Vec::new(),
            strict: true,
            static_mode: false,
        }
    }
}

impl SimOptions {
    pub fn with_input(mut self, qubits: Vec<QubitId>, state: Vec<Complex64>) -> Self {
        self.inputs.push((qubits, state));
        self
    }

    pub fn with_dirty(mut self, seeds: DirtySeeds) -> Self {
        self.dirty_seeds = seeds;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeallocVerdict {
    pub qubit: QubitId,
    pub layer: usize,
    /// |1⟩ mass of the qubit at deallocation.
    pub mass: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirtyVerdict {
    pub qubit: QubitId,
    pub layer: usize,
    /// Probability that the qubit is back in its seeded state.
    pub overlap: f64,
    pub restored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub fidelity: Option<f64>,
    pub ancilla_verdicts: Vec<DeallocVerdict>,
    pub dirty_restoration: Vec<DirtyVerdict>,
    pub peak_live_qubits: usize,
    pub peak_support: usize,
    pub max_dealloc_mass: f64,
    pub norm_defect: f64,
}

impl SimReport {
    pub fn all_clean(&self) -> bool {
        self.ancilla_verdicts.iter().all(|v| v.ok) && self.dirty_restoration.iter().all(|v| v.restored)
    }
}

/// Final simulator state together with the id-to-handle mapping.
#[derive(Clone, Debug)]
pub struct SimState {
    state: SparseState,
    handles: HashMap<QubitId, Handle>,
    /// Handles of every lifetime, in allocation order, for static-mode projection.
    pub lifetime_handles: Vec<(QubitId, Handle, QubitKind)>,
}

impl SimState {
    pub fn sparse(&self) -> &SparseState {
        &self.state
    }

    fn handles_of(&self, qs: &[QubitId]) -> Vec<Handle> {
        qs.iter().map(|q| self.handles.get(q).copied().unwrap_or(usize::MAX - q.index())).collect()
    }

    /// Qubits live at the end of the run, ascending.
    pub fn live_qubits(&self) -> Vec<QubitId> {
        let mut v: Vec<QubitId> = self.handles.iter().filter(|(_, h)| self.state.is_live(**h)).map(|(q, _)| *q).collect();
        v.sort_unstable();
        v
    }

    /// Dense amplitudes over `qs`, first qubit most significant.
    pub fn dense(&self, qs: &[QubitId]) -> Result<Vec<Complex64>, SimError> {
        self.state.dense(&self.handles_of(qs))
    }

    /// Dense amplitudes over explicit handles (static-mode inspection).
    pub fn dense_handles(&self, hs: &[Handle]) -> Result<Vec<Complex64>, SimError> {
        self.state.dense(hs)
    }

    /// ⟨target|ψ⟩ over `qs`.
    pub fn overlap(&self, qs: &[QubitId], target: &[Complex64]) -> Result<Complex64, SimError> {
        let d = self.dense(qs)?;
        Ok(target.iter().zip(&d).map(|(t, a)| t.conj() * a).sum())
    }

    pub fn fidelity(&self, qs: &[QubitId], target: &[Complex64]) -> Result<f64, SimError> {
        Ok(self.overlap(qs, target)?.norm())
    }

    /// |⟨⊗_g t_g|ψ⟩| for a product target over disjoint qubit groups. Each
    /// simulated component must lie within a single group.
    pub fn fidelity_product(&self, groups: &[(Vec<QubitId>, Vec<Complex64>)]) -> Result<f64, SimError> {
        let mut ov = self.state.scalar();
        for (qs, t) in groups {
            let d = self.state.dense_unscaled(&self.handles_of(qs))?;
            ov *= t.iter().zip(&d).map(|(t, a)| t.conj() * a).sum::<Complex64>();
        }
        Ok(ov.norm())
    }
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub report: SimReport,
    pub state: SimState,
}

fn draw_seed(policy: &DirtySeeds, rng: &mut ChaCha8Rng, q: QubitId) -> [Complex64; 2] {
    let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    match policy {
        DirtySeeds::Zero => zero,
        DirtySeeds::RandomBasis(_) => {
            if rng.gen_bool(0.5) {
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            } else {
                zero
            }
        }
        DirtySeeds::RandomProduct(_) => {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let phi: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            [Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)]
        }
        DirtySeeds::Explicit(map) => map.get(&q).copied().unwrap_or(zero),
    }
}

/// Simulates `c` layer by layer. At each layer boundary deallocations are
/// checked and contracted first, then allocations are tensored in, then the
/// layer's gates are applied.
pub fn run(c: &Circuit, opts: &SimOptions) -> Result<SimOutcome, SimError> {
    let tol = opts.tolerances;
    let mut st = SparseState::new(opts.cap, tol.prune);
    let mut handles: HashMap<QubitId, Handle> = HashMap::new();
    let mut next_handle: Handle = 0;
    let mut lifetime_handles = Vec::new();
    let mut seeds: HashMap<Handle, [Complex64; 2]> = HashMap::new();
    let seed_value = match opts.dirty_seeds {
        DirtySeeds::RandomBasis(s) | DirtySeeds::RandomProduct(s) => s,
        _ => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed_value);

    let mut preloaded: HashMap<QubitId, bool> = HashMap::new();
    for (qs, vec) in &opts.inputs {
        if vec.len() != 1usize << qs.len() {
            return Err(SimError::BadInput(format!("input over {} qubits has {} amplitudes", qs.len(), vec.len())));
        }
        let hs: Vec<Handle> = qs
            .iter()
            .map(|&q| {
                let h = next_handle;
                next_handle += 1;
                handles.insert(q, h);
                preloaded.insert(q, true);
                lifetime_handles.push((q, h, QubitKind::Clean));
                h
            })
            .collect();
        st.alloc_group(&hs, vec);
    }

    let mut allocs: BTreeMap<usize, Vec<(QubitId, Lifetime)>> = BTreeMap::new();
    let mut deallocs: BTreeMap<usize, Vec<(QubitId, Lifetime)>> = BTreeMap::new();
    for (q, l) in c.all_lifetimes() {
        if l.dealloc == Some(l.alloc) {
            continue;
        }
        allocs.entry(l.alloc).or_default().push((q, *l));
        if let Some(d) = l.dealloc {
            deallocs.entry(d).or_default().push((q, *l));
        }
    }

    let mut verdicts = Vec::new();
    let mut dirty = Vec::new();
    let mut max_mass: f64 = 0.0;
    let end = horizon(c);
    for layer in 0..=end {
        if !opts.static_mode {
            for &(q, l) in deallocs.get(&layer).into_iter().flatten() {
                let h = *handles.get(&q).ok_or(SimError::UnknownQubit(q))?;
                match l.kind {
                    QubitKind::Clean => {
                        let mass = st.release_zero(h)?;
                        max_mass = max_mass.max(mass);
                        let ok = mass <= tol.dealloc_mass;
                        verdicts.push(DeallocVerdict { qubit: q, layer, mass, ok });
                        if !ok && opts.strict {
                            return Err(SimError::DeallocNotZero { qubit: q, layer, mass });
                        }
                    }
                    QubitKind::Dirty => {
                        let seed = seeds.remove(&h).expect("dirty seed recorded");
                        let overlap = st.release_onto(h, seed)?;
                        let restored = 1.0 - overlap <= tol.dealloc_mass;
                        dirty.push(DirtyVerdict { qubit: q, layer, overlap, restored });
                        if !restored && opts.strict {
                            return Err(SimError::DirtyNotRestored { qubit: q, layer, defect: 1.0 - overlap });
                        }
                    }
                }
            }
        }
        for &(q, l) in allocs.get(&layer).into_iter().flatten() {
            if l.persistent && preloaded.remove(&q).is_some() {
                continue;
            }
            let h = next_handle;
            next_handle += 1;
            handles.insert(q, h);
            lifetime_handles.push((q, h, l.kind));
            let seed = match l.kind {
                QubitKind::Clean => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                QubitKind::Dirty => {
                    let s = draw_seed(&opts.dirty_seeds, &mut rng, q);
                    seeds.insert(h, s);
                    s
                }
            };
            st.alloc(h, seed);
        }
        if let Some(gates) = c.layers().get(layer) {
            for g in gates {
                let hs: smallvec::SmallVec<[Handle; 3]> = g
                    .qubits
                    .iter()
                    .map(|q| handles.get(q).copied().ok_or(SimError::UnknownQubit(*q)))
                    .collect::<Result<_, _>>()?;
                st.apply(g.kind, &hs)?;
            }
        }
    }

    let norm_defect = (1.0 - st.norm_sqr()).abs();
    if norm_defect > tol.norm_drift {
        return Err(SimError::NormDrift(norm_defect));
    }
    let report = SimReport {
        fidelity: None,
        ancilla_verdicts: verdicts,
        dirty_restoration: dirty,
        peak_live_qubits: st.peak_live(),
        peak_support: st.peak_support(),
        max_dealloc_mass: max_mass,
        norm_defect,
    };
    Ok(SimOutcome { report, state: SimState { state: st, handles, lifetime_handles } })
}

/// Runs `c` and records fidelity of `qs` against `target`.
pub fn run_with_target(c: &Circuit, opts: &SimOptions, qs: &[QubitId], target: &[Complex64]) -> Result<SimOutcome, SimError> {
    let mut out = run(c, opts)?;
    out.report.fidelity = Some(out.state.fidelity(qs, target)?);
    Ok(out)
}
