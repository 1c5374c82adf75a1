//! Classical preprocessing: target normalization, partition norms, the
//! partial-sum angle tree and every rotation angle and phase the circuits need.
//!
//! Basis index convention: qubit 0 of a register is the most significant bit
//! of the basis index, so the "first m bits" of `j` are `j >> (n - m)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmplitudeError {
    #[error("length {0} is not a power of two >= 2")]
    LengthNotPowerOfTwo(usize),
    #[error("amplitude vector is zero")]
    ZeroVector,
    #[error("amplitude vector contains a non-finite entry")]
    NonFinite,
    #[error("split m={m} invalid for n={n} (need 1 <= m < n)")]
    BadSplit { m: usize, n: usize },
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("malformed amplitude document: {0}")]
    Json(String),
}

/// A normalized amplitude vector of dimension 2ⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    n: usize,
    amplitudes: Vec<Complex64>,
    norm: f64,
}

impl TargetState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Normalized amplitudes.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Euclidean norm of the raw input.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm()).collect()
    }

    pub fn is_real_nonnegative(&self) -> bool {
        self.amplitudes.iter().all(|a| a.im == 0.0 && a.re >= 0.0)
    }
}

/// Validates and normalizes a raw amplitude vector.
pub fn make_target(raw: &[Complex64]) -> Result<TargetState, AmplitudeError> {
    let len = raw.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(AmplitudeError::LengthNotPowerOfTwo(len));
    }
    if raw.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(AmplitudeError::NonFinite);
    }
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(AmplitudeError::ZeroVector);
    }
    let amplitudes: Vec<Complex64> = raw.iter().map(|a| a / norm).collect();
    let check: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    debug_assert!((check - 1.0).abs() <= Tolerances::DEFAULT.normalization * 10.0);
    Ok(TargetState {
        n: len.trailing_zeros() as usize,
        amplitudes,
        norm,
    })
}

/// Convenience wrapper for real inputs.
pub fn make_real_target(raw: &[f64]) -> Result<TargetState, AmplitudeError> {
    let v: Vec<Complex64> = raw.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    make_target(&v)
}

/// Norms y_i of the 2ᵐ blocks sharing the leading m index bits.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionNorms {
    m: usize,
    values: Vec<f64>,
}

impl PartitionNorms {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Wraps arbitrary non-negative values (length 2ᵐ) as partition norms.
    pub fn from_values(values: Vec<f64>) -> Result<Self, AmplitudeError> {
        let len = values.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(AmplitudeError::LengthNotPowerOfTwo(len));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AmplitudeError::NonFinite);
        }
        Ok(Self {
            m: len.trailing_zeros() as usize,
            values: values.into_iter().map(f64::abs).collect(),
        })
    }
}

pub fn partition_norms(t: &TargetState, m: usize) -> Result<PartitionNorms, AmplitudeError> {
    if m == 0 || m >= t.n {
        return Err(AmplitudeError::BadSplit { m, n: t.n });
    }
    let block = 1usize << (t.n - m);
    let values = t
        .amplitudes
        .chunks(block)
        .map(|c| c.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(PartitionNorms { m, values })
}

/// Binary tree of squared partial sums.
///
/// `nodes[s][p]` is S_{s,p} for s < m; `nodes[m]` is the layer of squared
/// input values, whose pairwise sums form the stored leaves S_{m−1,p}.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleTree {
    levels: usize,
    nodes: Vec<Vec<f64>>,
}

impl AngleTree {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn node(&self, s: usize, p: usize) -> f64 {
        self.nodes[s][p]
    }

    pub fn level(&self, s: usize) -> &[f64] {
        &self.nodes[s]
    }

    pub fn root(&self) -> f64 {
        self.nodes[0][0]
    }

    /// Squared input values below the stored leaves.
    pub fn leaf_layer(&self) -> &[f64] {
        &self.nodes[self.levels]
    }

    /// Count of nonzero stored values across all levels, including the leaf layer.
    pub fn nonzero_count(&self) -> usize {
        self.nodes.iter().flatten().filter(|v| **v != 0.0).count()
    }

    /// Sets input value `index` to `new_value` in place, updating only the
    /// root-to-leaf path. Returns the number of node writes performed.
    pub fn update_leaf_in_place(&mut self, index: usize, new_value: f64) -> Result<usize, AmplitudeError> {
        let len = self.nodes[self.levels].len();
        if index >= len {
            return Err(AmplitudeError::IndexOutOfRange { index, len });
        }
        self.nodes[self.levels][index] = new_value * new_value;
        let mut writes = 1;
        let mut idx = index;
        for s in (0..self.levels).rev() {
            idx >>= 1;
            self.nodes[s][idx] = self.nodes[s + 1][2 * idx] + self.nodes[s + 1][2 * idx + 1];
            writes += 1;
        }
        Ok(writes)
    }

    /// Maximum violation of the parent-sum rule over all internal nodes.
    pub fn parent_sum_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.levels {
            for (p, v) in self.nodes[s].iter().enumerate() {
                let d = (v - self.nodes[s + 1][2 * p] - self.nodes[s + 1][2 * p + 1]).abs();
                worst = worst.max(d);
            }
        }
        worst
    }
}

pub fn build_angle_tree(values: &[f64]) -> Result<AngleTree, AmplitudeError> {
    let len = values.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(AmplitudeError::LengthNotPowerOfTwo(len));
    }
    let levels = len.trailing_zeros() as usize;
    let mut nodes = vec![Vec::new(); levels + 1];
    nodes[levels] = values.iter().map(|v| v * v).collect();
    for s in (0..levels).rev() {
        let below = &nodes[s + 1];
        let row: Vec<f64> = below.chunks(2).map(|c| c[0] + c[1]).collect();
        nodes[s] = row;
    }
    Ok(AngleTree { levels, nodes })
}

/// Returns a copy of `tree` with input value `index` replaced.
pub fn update_leaf(tree: &AngleTree, index: usize, new_value: f64) -> Result<AngleTree, AmplitudeError> {
    let mut t = tree.clone();
    t.update_leaf_in_place(index, new_value)?;
    Ok(t)
}

/// θ_{s,p} indexed as `theta[s][p]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSet {
    m: usize,
    theta: Vec<Vec<f64>>,
}

impl AngleSet {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, s: usize, p: usize) -> f64 {
        self.theta[s][p]
    }

    pub fn level(&self, s: usize) -> &[f64] {
        &self.theta[s]
    }

    pub fn len(&self) -> usize {
        self.theta.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Angles in (s, p) lexicographic order.
    pub fn flat(&self) -> Vec<f64> {
        self.theta.iter().flatten().copied().collect()
    }

    /// Applies `f` to every angle; used for perturbation studies.
    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> AngleSet {
        let theta = self
            .theta
            .iter()
            .enumerate()
            .map(|(s, row)| row.iter().enumerate().map(|(p, &t)| f(s, p, t)).collect())
            .collect();
        AngleSet { m: self.m, theta }
    }
}

fn split_angle(parent: f64, left: f64) -> f64 {
    if parent <= 0.0 {
        return 0.0;
    }
    let ratio = (left.max(0.0) / parent).sqrt().clamp(0.0, 1.0);
    2.0 * ratio.acos()
}

pub fn sp_angles(tree: &AngleTree) -> AngleSet {
    let theta = (0..tree.levels)
        .map(|s| {
            tree.nodes[s]
                .iter()
                .enumerate()
                .map(|(p, &parent)| split_angle(parent, tree.nodes[s + 1][2 * p]))
                .collect()
        })
        .collect();
    AngleSet { m: tree.levels, theta }
}

/// Per-control-value angle families θ^{(k)}_{s,p} and optional phases φ^{(k)}_j.
#[derive(Clone, Debug, PartialEq)]
pub struct CspAngleSet {
    m: usize,
    n: usize,
    theta: Vec<AngleSet>,
    phases: Option<Vec<Vec<f64>>>,
}

impl CspAngleSet {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn branch(&self, k: usize) -> &AngleSet {
        &self.theta[k]
    }

    pub fn get(&self, k: usize, s: usize, p: usize) -> f64 {
        self.theta[k].get(s, p)
    }

    pub fn phases(&self) -> Option<&[Vec<f64>]> {
        self.phases.as_deref()
    }

    pub fn phase(&self, k: usize, j: usize) -> f64 {
        self.phases.as_ref().map_or(0.0, |ph| ph[k][j])
    }

    pub fn angle_count(&self) -> usize {
        self.theta.iter().map(AngleSet::len).sum()
    }

    pub fn phase_count(&self) -> usize {
        self.phases.as_ref().map_or(0, |ph| ph.iter().map(Vec::len).sum())
    }

    pub fn map_angles(&self, mut f: impl FnMut(usize, usize, usize, f64) -> f64) -> CspAngleSet {
        let theta = self
            .theta
            .iter()
            .enumerate()
            .map(|(k, a)| a.map(|s, p, t| f(k, s, p, t)))
            .collect();
        CspAngleSet { theta, ..self.clone() }
    }
}

/// Maps an angle into (−π, π].
fn wrap_phase(phi: f64) -> f64 {
    if phi <= -std::f64::consts::PI {
        phi + 2.0 * std::f64::consts::PI
    } else {
        phi
    }
}

pub fn csp_angles(t: &TargetState, m: usize, with_phases: bool) -> Result<CspAngleSet, AmplitudeError> {
    if m == 0 || m >= t.n {
        return Err(AmplitudeError::BadSplit { m, n: t.n });
    }
    let block = 1usize << (t.n - m);
    let mut theta = Vec::with_capacity(1 << m);
    let mut phases = Vec::new();
    for chunk in t.amplitudes.chunks(block) {
        let mags: Vec<f64> = chunk.iter().map(|a| a.norm()).collect();
        let tree = build_angle_tree(&mags)?;
        theta.push(sp_angles(&tree));
        if with_phases {
            phases.push(
                chunk
                    .iter()
                    .map(|a| if a.norm() == 0.0 { 0.0 } else { wrap_phase(a.arg()) })
                    .collect(),
            );
        }
    }
    Ok(CspAngleSet {
        m,
        n: t.n,
        theta,
        phases: with_phases.then_some(phases),
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AmpEntry {
    Complex([f64; 2]),
    Real(f64),
}

#[derive(Deserialize)]
struct AmplitudeDoc {
    amplitudes: Vec<AmpEntry>,
}

/// Parses `{"amplitudes": [...]}` with either real or `[re, im]` entries.
pub fn parse_amplitude_json(text: &str) -> Result<Vec<Complex64>, AmplitudeError> {
    let doc: AmplitudeDoc = serde_json::from_str(text).map_err(|e| AmplitudeError::Json(e.to_string()))?;
    Ok(doc
        .amplitudes
        .into_iter()
        .map(|e| match e {
            AmpEntry::Complex([re, im]) => Complex64::new(re, im),
            AmpEntry::Real(re) => Complex64::new(re, 0.0),
        })
        .collect())
}

/// Serializes amplitudes as `{"amplitudes": [[re, im], ...]}`.
pub fn amplitude_json(amps: &[Complex64]) -> serde_json::Value {
    serde_json::json!({ "amplitudes": amps.iter().map(|a| [a.re, a.im]).collect::<Vec<_>>() })
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct SpAngleEntry {
    pub s: usize,
    pub p: usize,
    pub theta: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct CspAngleEntry {
    pub k: usize,
    pub s: usize,
    pub p: usize,
    pub theta: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct PhaseEntry {
    pub k: usize,
    pub j: usize,
    pub phi: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct AngleDocument {
    pub sp_angles: Vec<SpAngleEntry>,
    pub csp_angles: Vec<CspAngleEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phases: Option<Vec<PhaseEntry>>,
}

impl AngleDocument {
    pub fn new(sp: &AngleSet, csp: Option<&CspAngleSet>) -> Self {
        let sp_angles = (0..sp.m())
            .flat_map(|s| sp.level(s).iter().enumerate().map(move |(p, &theta)| SpAngleEntry { s, p, theta }))
            .collect();
        let mut csp_angles = Vec::new();
        let mut phases = None;
        if let Some(c) = csp {
            for k in 0..(1usize << c.m()) {
                let b = c.branch(k);
                for s in 0..b.m() {
                    for (p, &theta) in b.level(s).iter().enumerate() {
                        csp_angles.push(CspAngleEntry { k, s, p, theta });
                    }
                }
            }
            phases = c.phases().map(|ph| {
                ph.iter()
                    .enumerate()
                    .flat_map(|(k, row)| row.iter().enumerate().map(move |(j, &phi)| PhaseEntry { k, j, phi }))
                    .collect()
            });
        }
        Self { sp_angles, csp_angles, phases }
    }
}
