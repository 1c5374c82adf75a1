use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, CircuitError};
use super::gate::QubitKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    Exact,
    Approximate,
}

/// How the total error ε is split among rotations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorBudget {
    /// ε′ = ε / (number of rotation gates).
    PerRotation,
    /// ε′ = ε / n with n the data-register width.
    PerDataQubit,
    /// ε′ fixed directly.
    Fixed(f64),
}

/// Cost model for rotations: unit depth (exact) or a synthesis depth
/// ceil(a·log₂(1/ε′)) + b per rotation-bearing layer (approximate).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSetModel {
    pub mode: CostMode,
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub budget: ErrorBudget,
}

impl GateSetModel {
    pub fn exact() -> Self {
        Self { mode: CostMode::Exact, a: 4.0, b: 0.0, epsilon: 1e-3, budget: ErrorBudget::PerRotation }
    }

    pub fn approximate(epsilon: f64) -> Self {
        Self { mode: CostMode::Approximate, epsilon, ..Self::exact() }
    }

    pub fn approximate_fixed(eps_prime: f64) -> Self {
        Self { mode: CostMode::Approximate, epsilon: eps_prime, budget: ErrorBudget::Fixed(eps_prime), ..Self::exact() }
    }

    pub fn with_budget(mut self, budget: ErrorBudget) -> Self {
        self.budget = budget;
        self
    }

    /// Depth charged for one layer of rotations synthesized to precision `eps_prime`.
    pub fn rotation_cost(&self, eps_prime: f64) -> usize {
        match self.mode {
            CostMode::Exact => 1,
            CostMode::Approximate => {
                let raw = (self.a * (1.0 / eps_prime).log2()).ceil() + self.b;
                raw.max(1.0) as usize
            }
        }
    }

    pub fn per_rotation_error(&self, rotations: usize, data_qubits: usize) -> f64 {
        match self.budget {
            ErrorBudget::PerRotation => self.epsilon / rotations.max(1) as f64,
            ErrorBudget::PerDataQubit => self.epsilon / data_qubits.max(1) as f64,
            ErrorBudget::Fixed(e) => e,
        }
    }
}

/// Reference values of the size and depth lower bounds, for context only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBounds {
    pub size: f64,
    pub depth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub depth: usize,
    pub size: usize,
    pub qubit_count: usize,
    pub sa_exact: u64,
    pub sa_approx: u64,
    pub depth_approx: u64,
    pub clean_sa: u64,
    pub dirty_sa: u64,
    pub rotation_layers: usize,
    pub rotation_count: usize,
    pub t_count: usize,
    pub rotation_cost: usize,
    pub per_rotation_error: Option<f64>,
    pub gate_counts: BTreeMap<String, usize>,
    pub lower_bound_refs: Option<LowerBounds>,
}

/// Lifetime intervals `[start, end)` of every materialized qubit lifetime,
/// with persistent qubits running to the end of the circuit.
pub fn intervals(c: &Circuit) -> Result<Vec<(usize, usize, QubitKind, bool)>, CircuitError> {
    let horizon = horizon(c);
    let mut out = Vec::new();
    for (q, l) in c.all_lifetimes() {
        let end = match l.dealloc {
            Some(d) => d,
            None if l.persistent => horizon,
            None => return Err(CircuitError::LeakedQubit(q)),
        };
        out.push((l.alloc, end, l.kind, l.persistent));
    }
    Ok(out)
}

/// Last layer boundary touched by any gate or lifecycle event.
pub fn horizon(c: &Circuit) -> usize {
    c.all_lifetimes()
        .map(|(_, l)| l.dealloc.unwrap_or(l.alloc))
        .max()
        .unwrap_or(0)
        .max(c.span())
}

/// Live-qubit count q_t for every layer t.
pub fn profile(c: &Circuit) -> Result<Vec<usize>, CircuitError> {
    profile_filtered(c, |_, _| true)
}

/// Live count of non-persistent qubits per layer.
pub fn ancilla_profile(c: &Circuit) -> Result<Vec<usize>, CircuitError> {
    profile_filtered(c, |_, persistent| !persistent)
}

fn profile_filtered(c: &Circuit, keep: impl Fn(QubitKind, bool) -> bool) -> Result<Vec<usize>, CircuitError> {
    let h = horizon(c);
    let mut diff = vec![0i64; h + 1];
    for (s, e, kind, persistent) in intervals(c)? {
        if keep(kind, persistent) && e > s {
            diff[s] += 1;
            diff[e] -= 1;
        }
    }
    let mut acc = 0i64;
    Ok(diff[..h]
        .iter()
        .map(|d| {
            acc += d;
            acc as usize
        })
        .collect())
}

/// Computes depth, size and spacetime allocation; the SA is derived both per
/// layer and per qubit lifetime, and the two totals must agree.
pub fn spacetime_allocation(c: &Circuit, model: &GateSetModel) -> Result<ResourceReport, CircuitError> {
    let ivs = intervals(c)?;
    let lifetimes: u64 = ivs.iter().map(|(s, e, _, _)| (e - s) as u64).sum();
    let clean_sa: u64 = ivs.iter().filter(|iv| iv.2 == QubitKind::Clean).map(|(s, e, _, _)| (e - s) as u64).sum();
    let dirty_sa = lifetimes - clean_sa;
    let q = profile(c)?;
    let sa_exact: u64 = q.iter().map(|&v| v as u64).sum();
    if sa_exact != lifetimes {
        return Err(CircuitError::SaMismatch { lifetimes, layers: sa_exact });
    }

    let mut gate_counts = BTreeMap::new();
    let mut rotation_count = 0;
    let mut t_count = 0;
    for (_, g) in c.gates() {
        *gate_counts.entry(g.kind.name().to_string()).or_insert(0) += 1;
        rotation_count += usize::from(g.kind.is_rotation());
        t_count += usize::from(g.kind.is_t_type());
    }
    let rot_layer: Vec<bool> = (0..q.len())
        .map(|t| c.layers().get(t).is_some_and(|gs| gs.iter().any(|g| g.kind.is_rotation())))
        .collect();
    let rotation_layers = rot_layer.iter().filter(|b| **b).count();

    let n_data = c.meta_usize("n").unwrap_or_else(|| c.persistent_qubits().len());
    let (rotation_cost, per_rotation_error) = match model.mode {
        CostMode::Exact => (1, None),
        CostMode::Approximate => {
            let e = model.per_rotation_error(rotation_count, n_data);
            (model.rotation_cost(e), Some(e))
        }
    };
    let mut sa_approx = 0u64;
    let mut depth_approx = 0u64;
    for (t, &live) in q.iter().enumerate() {
        let w = if rot_layer[t] { rotation_cost as u64 } else { 1 };
        sa_approx += live as u64 * w;
        depth_approx += w;
    }
    let lower_bound_refs = c.meta_usize("n").map(|n| LowerBounds {
        size: 2f64.powi(n as i32),
        depth: n as f64 + if model.mode == CostMode::Approximate { (1.0 / model.epsilon).log2() } else { 0.0 },
    });

    Ok(ResourceReport {
        depth: c.depth(),
        size: c.size(),
        qubit_count: q.iter().copied().max().unwrap_or(0),
        sa_exact,
        sa_approx,
        depth_approx,
        clean_sa,
        dirty_sa,
        rotation_layers,
        rotation_count,
        t_count,
        rotation_cost,
        per_rotation_error,
        gate_counts,
        lower_bound_refs,
    })
}
