use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use super::gate::{Gate, QubitId, QubitKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("qubit {0} is not allocated")]
    OperandNotLive(QubitId),
    #[error("qubit {0} appears twice in one gate")]
    DuplicateOperand(QubitId),
    #[error("qubit {0} deallocated twice")]
    DoubleDealloc(QubitId),
    #[error("qubit {qubit} used at or after its deallocation (layer {layer})")]
    UseAfterDealloc { qubit: QubitId, layer: usize },
    #[error("qubit {0} allocated while still live")]
    AlreadyLive(QubitId),
    #[error("qubit {0} never deallocated and not persistent")]
    LeakedQubit(QubitId),
    #[error("gate {gate} expects {expected} operands, got {got}")]
    Arity { gate: &'static str, expected: usize, got: usize },
    #[error("cannot place qubit {qubit} at layer {layer}; earliest legal layer is {earliest}")]
    LayerOrder { qubit: QubitId, layer: usize, earliest: usize },
    #[error("spacetime identity violated: lifetimes sum {lifetimes}, layer sum {layers}")]
    SaMismatch { lifetimes: u64, layers: u64 },
    #[error("malformed circuit: {0}")]
    Malformed(String),
}

/// One allocation interval `[alloc, dealloc)` of a qubit id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lifetime {
    pub alloc: usize,
    pub dealloc: Option<usize>,
    pub kind: QubitKind,
    pub persistent: bool,
}

#[derive(Clone, Debug, Default)]
struct Record {
    lifetimes: Vec<Lifetime>,
    pending: Option<(QubitKind, bool)>,
    ready: usize,
    last_use: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Unknown,
    Pending,
    Live,
    Dead,
}

/// Gate packing policy for [`Circuit::append`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Placement {
    #[default]
    Asap,
    NewLayer,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Collision { layer: usize, qubit: QubitId },
    NotLive { layer: usize, qubit: QubitId },
    Arity { layer: usize, gate: String },
    DuplicateOperand { layer: usize, qubit: QubitId },
    LifetimeOrder { qubit: QubitId },
    RegisterOverlap { first: String, second: String, qubit: QubitId },
    RegisterSize { register: String, expected: usize, actual: usize },
}

/// Layered circuit over logical qubit ids with allocation lifetimes.
///
/// Qubits are declared lazily: a declared qubit becomes allocated at the layer
/// of its first gate unless an explicit allocation layer is given. Ids may be
/// reused once deallocated, giving a qubit several disjoint lifetimes.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    layers: Vec<Vec<Gate>>,
    records: Vec<Record>,
    registers: BTreeMap<String, Vec<QubitId>>,
    barriers: Vec<usize>,
    floor: usize,
    meta: BTreeMap<String, serde_json::Value>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    fn record_mut(&mut self, q: QubitId) -> &mut Record {
        if q.index() >= self.records.len() {
            self.records.resize_with(q.index() + 1, Record::default);
        }
        &mut self.records[q.index()]
    }

    fn state(&self, q: QubitId) -> State {
        match self.records.get(q.index()) {
            None => State::Unknown,
            Some(r) if r.pending.is_some() => State::Pending,
            Some(r) => match r.lifetimes.last() {
                None => State::Unknown,
                Some(l) if l.dealloc.is_none() => State::Live,
                Some(_) => State::Dead,
            },
        }
    }

    /// Number of distinct qubit ids ever referenced.
    pub fn num_ids(&self) -> usize {
        self.records.len()
    }

    /// Declares a new qubit, allocated just in time at its first gate.
    pub fn declare(&mut self, kind: QubitKind, persistent: bool) -> QubitId {
        let q = QubitId(self.records.len() as u32);
        self.declare_id(q, kind, persistent).expect("fresh id");
        q
    }

    /// Declares (or re-declares after deallocation) a specific id.
    pub fn declare_id(&mut self, q: QubitId, kind: QubitKind, persistent: bool) -> Result<(), CircuitError> {
        match self.state(q) {
            State::Pending | State::Live => Err(CircuitError::AlreadyLive(q)),
            _ => {
                self.record_mut(q).pending = Some((kind, persistent));
                Ok(())
            }
        }
    }

    /// Allocates a new qubit at an explicit layer.
    pub fn alloc_at(&mut self, kind: QubitKind, layer: usize) -> QubitId {
        let q = QubitId(self.records.len() as u32);
        self.alloc_id_at(q, kind, false, layer).expect("fresh id");
        q
    }

    pub fn alloc_id_at(&mut self, q: QubitId, kind: QubitKind, persistent: bool, layer: usize) -> Result<(), CircuitError> {
        match self.state(q) {
            State::Pending | State::Live => return Err(CircuitError::AlreadyLive(q)),
            _ => {}
        }
        let rec = self.record_mut(q);
        if layer < rec.ready {
            return Err(CircuitError::LayerOrder { qubit: q, layer, earliest: rec.ready });
        }
        rec.lifetimes.push(Lifetime { alloc: layer, dealloc: None, kind, persistent });
        rec.ready = layer;
        Ok(())
    }

    /// Deallocates at the earliest legal layer; returns that layer.
    pub fn dealloc(&mut self, q: QubitId) -> Result<usize, CircuitError> {
        let layer = match self.state(q) {
            State::Unknown => return Err(CircuitError::OperandNotLive(q)),
            State::Dead => return Err(CircuitError::DoubleDealloc(q)),
            State::Pending => self.records[q.index()].ready.max(self.floor),
            State::Live => self.records[q.index()].ready,
        };
        self.dealloc_at(q, layer)?;
        Ok(layer)
    }

    pub fn dealloc_at(&mut self, q: QubitId, layer: usize) -> Result<(), CircuitError> {
        match self.state(q) {
            State::Unknown => Err(CircuitError::OperandNotLive(q)),
            State::Dead => Err(CircuitError::DoubleDealloc(q)),
            State::Pending => {
                let rec = self.record_mut(q);
                if layer < rec.ready {
                    return Err(CircuitError::LayerOrder { qubit: q, layer, earliest: rec.ready });
                }
                let (kind, persistent) = rec.pending.take().expect("pending");
                rec.lifetimes.push(Lifetime { alloc: layer, dealloc: Some(layer), kind, persistent });
                rec.ready = layer;
                Ok(())
            }
            State::Live => {
                let rec = self.record_mut(q);
                if layer < rec.ready {
                    return Err(CircuitError::UseAfterDealloc { qubit: q, layer: rec.ready - 1 });
                }
                rec.lifetimes.last_mut().expect("live").dealloc = Some(layer);
                rec.ready = layer;
                Ok(())
            }
        }
    }

    fn earliest(&self, g: &Gate) -> Result<usize, CircuitError> {
        let expected = g.kind.arity();
        if g.qubits.len() != expected {
            return Err(CircuitError::Arity { gate: g.kind.name(), expected, got: g.qubits.len() });
        }
        let mut lb = self.floor;
        for (i, &q) in g.qubits.iter().enumerate() {
            if g.qubits[..i].contains(&q) {
                return Err(CircuitError::DuplicateOperand(q));
            }
            match self.state(q) {
                State::Unknown => return Err(CircuitError::OperandNotLive(q)),
                State::Dead => {
                    let layer = self.records[q.index()].ready;
                    return Err(CircuitError::UseAfterDealloc { qubit: q, layer });
                }
                _ => lb = lb.max(self.records[q.index()].ready),
            }
        }
        Ok(lb)
    }

    fn commit(&mut self, g: Gate, layer: usize) {
        for &q in &g.qubits {
            let rec = self.record_mut(q);
            if let Some((kind, persistent)) = rec.pending.take() {
                rec.lifetimes.push(Lifetime { alloc: layer, dealloc: None, kind, persistent });
            }
            rec.last_use = Some(layer);
            rec.ready = layer + 1;
        }
        if self.layers.len() <= layer {
            self.layers.resize_with(layer + 1, Vec::new);
        }
        self.layers[layer].push(g);
    }

    /// Appends a gate; returns the layer it landed in.
    pub fn append(&mut self, g: Gate, policy: Placement) -> Result<usize, CircuitError> {
        let mut layer = self.earliest(&g)?;
        if policy == Placement::NewLayer {
            layer = layer.max(self.layers.len());
        }
        self.commit(g, layer);
        Ok(layer)
    }

    /// Places a gate at an explicit layer, which must not precede any operand's last use.
    pub fn place_at(&mut self, g: Gate, layer: usize) -> Result<(), CircuitError> {
        let lb = self.earliest(&g)?;
        if layer < lb {
            let qubit = g
                .qubits
                .iter()
                .copied()
                .max_by_key(|q| self.records[q.index()].ready)
                .unwrap_or(QubitId(0));
            return Err(CircuitError::LayerOrder { qubit, layer, earliest: lb });
        }
        self.commit(g, layer);
        Ok(())
    }

    /// Forces every later gate to start after all current layers.
    pub fn barrier(&mut self) {
        self.floor = self.layers.len();
        if self.barriers.last() != Some(&self.floor) {
            self.barriers.push(self.floor);
        }
    }

    pub fn barriers(&self) -> &[usize] {
        &self.barriers
    }

    pub fn set_register(&mut self, name: impl Into<String>, ids: Vec<QubitId>) {
        self.registers.insert(name.into(), ids);
    }

    pub fn registers(&self) -> &BTreeMap<String, Vec<QubitId>> {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Option<&[QubitId]> {
        self.registers.get(name).map(Vec::as_slice)
    }

    pub fn set_meta(&mut self, key: &str, value: serde_json::Value) {
        self.meta.insert(key.to_string(), value);
    }

    pub fn meta(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.meta
    }

    pub fn meta_usize(&self, key: &str) -> Option<usize> {
        self.meta.get(key).and_then(|v| v.as_u64()).map(|v| v as usize)
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    /// Number of layer slots, including any empty ones.
    pub fn span(&self) -> usize {
        self.layers.len()
    }

    /// Number of nonempty layers.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| !l.is_empty()).count()
    }

    pub fn size(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn gates(&self) -> impl Iterator<Item = (usize, &Gate)> {
        self.layers.iter().enumerate().flat_map(|(l, gs)| gs.iter().map(move |g| (l, g)))
    }

    pub fn lifetimes(&self, q: QubitId) -> &[Lifetime] {
        self.records.get(q.index()).map_or(&[], |r| r.lifetimes.as_slice())
    }

    /// Every materialized lifetime, ordered by qubit id then time.
    pub fn all_lifetimes(&self) -> impl Iterator<Item = (QubitId, &Lifetime)> {
        self.records
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.lifetimes.iter().map(move |l| (QubitId(i as u32), l)))
    }

    pub fn persistent_qubits(&self) -> Vec<QubitId> {
        self.all_lifetimes().filter(|(_, l)| l.persistent).map(|(q, _)| q).collect()
    }

    /// Declared qubits that never received a gate or deallocation.
    pub fn pending_qubits(&self) -> Vec<QubitId> {
        (0..self.records.len())
            .map(|i| QubitId(i as u32))
            .filter(|&q| self.state(q) == State::Pending)
            .collect()
    }

    /// Rebuilds a circuit from explicit parts without rescheduling.
    pub fn from_parts(
        layers: Vec<Vec<Gate>>,
        lifetimes: Vec<(QubitId, Lifetime)>,
        registers: BTreeMap<String, Vec<QubitId>>,
        barriers: Vec<usize>,
        meta: BTreeMap<String, serde_json::Value>,
    ) -> Result<Circuit, CircuitError> {
        let mut c = Circuit { layers, registers, barriers, meta, ..Default::default() };
        c.floor = c.barriers.last().copied().unwrap_or(0);
        for (q, l) in lifetimes {
            c.record_mut(q).lifetimes.push(l);
        }
        for (layer, gates) in c.layers.iter().enumerate() {
            for g in gates {
                for &q in &g.qubits {
                    if q.index() >= c.records.len() {
                        return Err(CircuitError::OperandNotLive(q));
                    }
                    let r = &mut c.records[q.index()];
                    r.last_use = Some(r.last_use.map_or(layer, |u| u.max(layer)));
                }
            }
        }
        for r in &mut c.records {
            r.lifetimes.sort_by_key(|l| l.alloc);
            r.ready = match r.lifetimes.last() {
                Some(Lifetime { dealloc: Some(d), .. }) => *d,
                _ => r.last_use.map_or(0, |u| u + 1),
            };
        }
        Ok(c)
    }

    /// Lists every structural violation; empty for well-formed circuits.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (q, r) in self.records.iter().enumerate() {
            let q = QubitId(q as u32);
            let mut prev_end = 0;
            for (i, l) in r.lifetimes.iter().enumerate() {
                let end_ok = l.dealloc.is_none_or(|d| d >= l.alloc);
                let open_ok = l.dealloc.is_some() || i + 1 == r.lifetimes.len();
                if l.alloc < prev_end || !end_ok || !open_ok {
                    out.push(Violation::LifetimeOrder { qubit: q });
                }
                prev_end = l.dealloc.unwrap_or(usize::MAX);
            }
        }
        for (layer, gates) in self.layers.iter().enumerate() {
            let mut seen: HashMap<QubitId, ()> = HashMap::new();
            for g in gates {
                if g.qubits.len() != g.kind.arity() {
                    out.push(Violation::Arity { layer, gate: g.kind.name().to_string() });
                }
                for (i, &q) in g.qubits.iter().enumerate() {
                    if g.qubits[..i].contains(&q) {
                        out.push(Violation::DuplicateOperand { layer, qubit: q });
                        continue;
                    }
                    if seen.insert(q, ()).is_some() {
                        out.push(Violation::Collision { layer, qubit: q });
                    }
                    let live = self
                        .lifetimes(q)
                        .iter()
                        .any(|l| l.alloc <= layer && l.dealloc.is_none_or(|d| layer < d));
                    if !live {
                        out.push(Violation::NotLive { layer, qubit: q });
                    }
                }
            }
        }
        let mut owner: HashMap<QubitId, &str> = HashMap::new();
        for (name, ids) in &self.registers {
            for &q in ids {
                if let Some(first) = owner.insert(q, name) {
                    if first != name {
                        out.push(Violation::RegisterOverlap { first: first.to_string(), second: name.clone(), qubit: q });
                    }
                }
            }
        }
        if let (Some(n), Some(m)) = (self.meta_usize("n"), self.meta_usize("m")) {
            for (name, ids) in &self.registers {
                if let Some(expected) = expected_register_size(name, n, m) {
                    if expected != ids.len() {
                        out.push(Violation::RegisterSize { register: name.clone(), expected, actual: ids.len() });
                    }
                }
            }
        }
        out
    }
}

/// Register sizes prescribed for an (n, m) split. Names may carry a
/// `prefix.` scope and a `#k` occurrence suffix.
pub fn expected_register_size(name: &str, n: usize, m: usize) -> Option<usize> {
    let base = name.rsplit('.').next().unwrap_or(name);
    let base = base.split('#').next().unwrap_or(base);
    let big_m = 1usize << m;
    let b = if n > m { (1usize << (n - m)) - 1 } else { 0 };
    Some(match base {
        "D" => n,
        "A" | "F" => big_m - 1,
        "B0" | "F0" => b,
        "D1" => big_m - m - 1,
        "D2" => b * m,
        "D3" => b * (big_m - m - 1),
        "B1" | "F1" => (big_m - 1) * b,
        "A0" => 1,
        "A1" => big_m - 1,
        "A2" => big_m * b.saturating_sub(1),
        _ => return None,
    })
}
