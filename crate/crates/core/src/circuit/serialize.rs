//! Canonical JSON form and a plain-text dump.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, CircuitError, Lifetime};
use super::gate::{Gate, GateKind, QubitId, QubitKind};

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct GateDoc {
    pub op: String,
    pub params: Vec<f64>,
    pub qubits: Vec<u32>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct AllocDoc {
    pub qubit: u32,
    pub layer: usize,
    pub kind: QubitKind,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub persistent: bool,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct DeallocDoc {
    pub qubit: u32,
    pub layer: usize,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CircuitDoc {
    pub layers: Vec<Vec<GateDoc>>,
    pub alloc: Vec<AllocDoc>,
    pub dealloc: Vec<DeallocDoc>,
    pub registers: BTreeMap<String, Vec<u32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub barriers: Vec<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl CircuitDoc {
    pub fn from_circuit(c: &Circuit) -> Self {
        let layers = c
            .layers()
            .iter()
            .map(|gs| {
                gs.iter()
                    .map(|g| GateDoc {
                        op: g.kind.name().to_string(),
                        params: g.kind.param().into_iter().collect(),
                        qubits: g.qubits.iter().map(|q| q.0).collect(),
                    })
                    .collect()
            })
            .collect();
        let mut alloc = Vec::new();
        let mut dealloc = Vec::new();
        for (q, l) in c.all_lifetimes() {
            alloc.push(AllocDoc { qubit: q.0, layer: l.alloc, kind: l.kind, persistent: l.persistent });
            if let Some(d) = l.dealloc {
                dealloc.push(DeallocDoc { qubit: q.0, layer: d });
            }
        }
        let registers = c
            .registers()
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|q| q.0).collect()))
            .collect();
        CircuitDoc {
            layers,
            alloc,
            dealloc,
            registers,
            barriers: c.barriers().to_vec(),
            meta: c.meta().clone(),
        }
    }

    pub fn to_circuit(&self) -> Result<Circuit, CircuitError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for gs in &self.layers {
            let mut row = Vec::with_capacity(gs.len());
            for gd in gs {
                let kind = GateKind::from_name(&gd.op, &gd.params)
                    .ok_or_else(|| CircuitError::Malformed(format!("unknown gate {} with {} params", gd.op, gd.params.len())))?;
                if kind.arity() != gd.qubits.len() {
                    return Err(CircuitError::Arity { gate: kind.name(), expected: kind.arity(), got: gd.qubits.len() });
                }
                let qs: Vec<QubitId> = gd.qubits.iter().map(|&q| QubitId(q)).collect();
                row.push(Gate::new(kind, &qs));
            }
            layers.push(row);
        }
        let mut deallocs: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for d in &self.dealloc {
            deallocs.entry(d.qubit).or_default().push(d.layer);
        }
        for v in deallocs.values_mut() {
            v.sort_unstable();
            v.reverse();
        }
        let mut allocs: Vec<&AllocDoc> = self.alloc.iter().collect();
        allocs.sort_by_key(|a| (a.qubit, a.layer));
        let mut lifetimes = Vec::with_capacity(allocs.len());
        for a in allocs {
            let dealloc = deallocs.get_mut(&a.qubit).and_then(Vec::pop);
            if let Some(d) = dealloc {
                if d < a.layer {
                    return Err(CircuitError::Malformed(format!("qubit {} freed at {} before allocation at {}", a.qubit, d, a.layer)));
                }
            }
            lifetimes.push((QubitId(a.qubit), Lifetime { alloc: a.layer, dealloc, kind: a.kind, persistent: a.persistent }));
        }
        if let Some((q, _)) = deallocs.iter().find(|(_, v)| !v.is_empty()) {
            return Err(CircuitError::Malformed(format!("dealloc of unallocated qubit {q}")));
        }
        let registers = self
            .registers
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|&q| QubitId(q)).collect()))
            .collect();
        Circuit::from_parts(layers, lifetimes, registers, self.barriers.clone(), self.meta.clone())
    }
}

/// Canonical JSON encoding.
pub fn to_json(c: &Circuit) -> String {
    serde_json::to_string(&CircuitDoc::from_circuit(c)).expect("circuit documents always serialize")
}

pub fn from_json(text: &str) -> Result<Circuit, CircuitError> {
    let doc: CircuitDoc = serde_json::from_str(text).map_err(|e| CircuitError::Malformed(e.to_string()))?;
    doc.to_circuit()
}

/// Human-readable listing, one gate per line, grouped by layer.
pub fn to_text(c: &Circuit) -> String {
    let mut allocs: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut deallocs: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (q, l) in c.all_lifetimes() {
        let kind = match l.kind {
            QubitKind::Clean => "clean",
            QubitKind::Dirty => "dirty",
        };
        allocs.entry(l.alloc).or_default().push(format!("alloc {q} {kind}"));
        if let Some(d) = l.dealloc {
            deallocs.entry(d).or_default().push(format!("dealloc {q}"));
        }
    }
    let mut out = String::new();
    let last = super::metrics::horizon(c);
    for layer in 0..=last {
        let gates = c.layers().get(layer);
        let events = deallocs.contains_key(&layer) || allocs.contains_key(&layer);
        if gates.is_none_or(Vec::is_empty) && !events {
            continue;
        }
        let _ = writeln!(out, "// layer {layer}");
        for line in deallocs.get(&layer).into_iter().flatten().chain(allocs.get(&layer).into_iter().flatten()) {
            let _ = writeln!(out, "// {line}");
        }
        for g in gates.into_iter().flatten() {
            let _ = writeln!(out, "{g}");
        }
    }
    out
}
