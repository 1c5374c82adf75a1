use std::collections::{BTreeMap, HashMap, HashSet};

use super::circuit::{Circuit, CircuitError, Placement};
use super::gate::{Gate, GateKind, QubitId, QubitKind};

/// One step of a straight-line construction.
#[derive(Clone, Debug, PartialEq)]
pub enum Instr {
    Alloc { qubit: QubitId, kind: QubitKind, persistent: bool },
    Gate(Gate),
    Dealloc { qubit: QubitId, kind: QubitKind },
    Barrier,
}

/// Instruction list that fragments are emitted into before scheduling.
///
/// Adjoints are formed on instruction ranges: order reversed, gates
/// inverted, allocations and deallocations exchanged.
#[derive(Clone, Debug, Default)]
pub struct Program {
    instrs: Vec<Instr>,
    next_id: u32,
    registers: Vec<(String, Vec<QubitId>)>,
    meta: BTreeMap<String, serde_json::Value>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn num_ids(&self) -> u32 {
        self.next_id
    }

    /// A new id with no instruction emitted.
    pub fn fresh_id(&mut self) -> QubitId {
        let q = QubitId(self.next_id);
        self.next_id += 1;
        q
    }

    pub fn alloc(&mut self, kind: QubitKind) -> QubitId {
        let q = self.fresh_id();
        self.instrs.push(Instr::Alloc { qubit: q, kind, persistent: false });
        q
    }

    pub fn alloc_n(&mut self, count: usize, kind: QubitKind) -> Vec<QubitId> {
        (0..count).map(|_| self.alloc(kind)).collect()
    }

    /// Allocates a qubit that lives until the end of the circuit.
    pub fn persistent(&mut self) -> QubitId {
        let q = self.fresh_id();
        self.instrs.push(Instr::Alloc { qubit: q, kind: QubitKind::Clean, persistent: true });
        q
    }

    pub fn persistent_n(&mut self, count: usize) -> Vec<QubitId> {
        (0..count).map(|_| self.persistent()).collect()
    }

    pub fn free(&mut self, q: QubitId, kind: QubitKind) {
        self.instrs.push(Instr::Dealloc { qubit: q, kind });
    }

    pub fn free_all(&mut self, qs: &[QubitId], kind: QubitKind) {
        for &q in qs {
            self.free(q, kind);
        }
    }

    pub fn gate(&mut self, kind: GateKind, qubits: &[QubitId]) {
        self.instrs.push(Instr::Gate(Gate::new(kind, qubits)));
    }

    pub fn push(&mut self, instr: Instr) {
        self.instrs.push(instr);
    }

    pub fn barrier(&mut self) {
        self.instrs.push(Instr::Barrier);
    }

    pub fn mark(&self) -> usize {
        self.instrs.len()
    }

    /// Removes and returns everything emitted since `mark`.
    pub fn split_off(&mut self, mark: usize) -> Vec<Instr> {
        self.instrs.split_off(mark)
    }

    /// Appends the adjoint of `instrs`. Persistent allocations are left out.
    pub fn push_adjoint(&mut self, instrs: &[Instr]) {
        for ins in instrs.iter().rev() {
            match ins {
                Instr::Alloc { persistent: true, .. } => {}
                other => self.instrs.push(adjoint_instr(other)),
            }
        }
    }

    /// Appends the adjoint of the range emitted since `mark`.
    pub fn adjoint_since(&mut self, mark: usize) {
        let tail: Vec<Instr> = self.instrs[mark..].to_vec();
        self.push_adjoint(&tail);
    }

    /// Appends `instrs` (or their adjoint) with ids translated through `map`.
    /// Ids missing from `map` receive fresh ids. Allocations of (original) ids in
    /// `skip_alloc` and deallocations of ids in `skip_dealloc` are dropped.
    pub fn push_mapped(
        &mut self,
        instrs: &[Instr],
        adjoint: bool,
        map: &mut HashMap<QubitId, QubitId>,
        skip_alloc: &HashSet<QubitId>,
        skip_dealloc: &HashSet<QubitId>,
    ) {
        let ordered: Box<dyn Iterator<Item = &Instr>> =
            if adjoint { Box::new(instrs.iter().rev()) } else { Box::new(instrs.iter()) };
        for ins in ordered {
            if adjoint && matches!(ins, Instr::Alloc { persistent: true, .. }) {
                continue;
            }
            let ins = if adjoint { adjoint_instr(ins) } else { ins.clone() };
            let skip = match &ins {
                Instr::Alloc { qubit, .. } => skip_alloc.contains(qubit),
                Instr::Dealloc { qubit, .. } => skip_dealloc.contains(qubit),
                _ => false,
            };
            if skip {
                continue;
            }
            let mut translate = |q: QubitId, this: &mut Program| *map.entry(q).or_insert_with(|| this.fresh_id());
            let out = match ins {
                Instr::Alloc { qubit, kind, persistent } => Instr::Alloc { qubit: translate(qubit, self), kind, persistent },
                Instr::Dealloc { qubit, kind } => Instr::Dealloc { qubit: translate(qubit, self), kind },
                Instr::Gate(mut g) => {
                    for q in g.qubits.iter_mut() {
                        *q = translate(*q, self);
                    }
                    Instr::Gate(g)
                }
                Instr::Barrier => Instr::Barrier,
            };
            self.instrs.push(out);
        }
    }

    /// Records a named register; repeated names get a `#k` suffix.
    pub fn register(&mut self, name: &str, ids: &[QubitId]) -> String {
        let mut key = name.to_string();
        let mut k = 2;
        while self.registers.iter().any(|(n, _)| *n == key) {
            key = format!("{name}#{k}");
            k += 1;
        }
        self.registers.push((key.clone(), ids.to_vec()));
        key
    }

    pub fn registers(&self) -> &[(String, Vec<QubitId>)] {
        &self.registers
    }

    pub fn set_meta(&mut self, key: &str, value: serde_json::Value) {
        self.meta.insert(key.to_string(), value);
    }

    pub fn meta(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.meta
    }

    /// Gates in emission order.
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.instrs.iter().filter_map(|i| match i {
            Instr::Gate(g) => Some(g),
            _ => None,
        })
    }

    /// Schedules the program into a layered circuit.
    pub fn to_circuit(&self, policy: Placement) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new();
        for ins in &self.instrs {
            match ins {
                Instr::Alloc { qubit, kind, persistent } => c.declare_id(*qubit, *kind, *persistent)?,
                Instr::Gate(g) => {
                    c.append(g.clone(), policy)?;
                }
                Instr::Dealloc { qubit, .. } => {
                    c.dealloc(*qubit)?;
                }
                Instr::Barrier => c.barrier(),
            }
        }
        for (name, ids) in &self.registers {
            c.set_register(name.clone(), ids.clone());
        }
        for (k, v) in &self.meta {
            c.set_meta(k, v.clone());
        }
        Ok(c)
    }
}

fn adjoint_instr(ins: &Instr) -> Instr {
    match ins {
        Instr::Alloc { qubit, kind, .. } => Instr::Dealloc { qubit: *qubit, kind: *kind },
        Instr::Dealloc { qubit, kind } => Instr::Alloc { qubit: *qubit, kind: *kind, persistent: false },
        Instr::Gate(g) => Instr::Gate(g.adjoint()),
        Instr::Barrier => Instr::Barrier,
    }
}

impl Circuit {
    /// Recovers an instruction list in layer order: deallocations, then
    /// allocations, then gates, with barriers at their recorded layers.
    pub fn to_program(&self) -> Program {
        let span = self.span();
        let mut allocs: BTreeMap<usize, Vec<(QubitId, QubitKind, bool)>> = BTreeMap::new();
        let mut deallocs: BTreeMap<usize, Vec<(QubitId, QubitKind)>> = BTreeMap::new();
        let mut instant: BTreeMap<usize, Vec<(QubitId, QubitKind)>> = BTreeMap::new();
        for (q, l) in self.all_lifetimes() {
            if l.dealloc == Some(l.alloc) {
                instant.entry(l.alloc).or_default().push((q, l.kind));
                continue;
            }
            allocs.entry(l.alloc).or_default().push((q, l.kind, l.persistent));
            if let Some(d) = l.dealloc {
                deallocs.entry(d).or_default().push((q, l.kind));
            }
        }
        let horizon = span
            .max(allocs.keys().next_back().map_or(0, |k| k + 1))
            .max(deallocs.keys().next_back().map_or(0, |k| k + 1))
            .max(instant.keys().next_back().map_or(0, |k| k + 1));
        let mut p = Program::new();
        p.next_id = self.num_ids() as u32;
        for layer in 0..horizon {
            if self.barriers().contains(&layer) {
                p.barrier();
            }
            for &(q, kind) in deallocs.get(&layer).into_iter().flatten() {
                p.free(q, kind);
            }
            for &(q, kind, persistent) in allocs.get(&layer).into_iter().flatten() {
                p.push(Instr::Alloc { qubit: q, kind, persistent });
            }
            for &(q, kind) in instant.get(&layer).into_iter().flatten() {
                p.push(Instr::Alloc { qubit: q, kind, persistent: false });
                p.free(q, kind);
            }
            if let Some(gs) = self.layers().get(layer) {
                for g in gs {
                    p.push(Instr::Gate(g.clone()));
                }
            }
        }
        for (name, ids) in self.registers() {
            p.registers.push((name.clone(), ids.clone()));
        }
        p.meta = self.meta().clone();
        p
    }

    /// The inverse circuit, rescheduled ASAP.
    pub fn adjoint(&self) -> Result<Circuit, CircuitError> {
        let prog = self.to_program();
        let mut out = Program::new();
        out.next_id = prog.next_id;
        for ins in prog.instrs() {
            if let Instr::Alloc { persistent: true, .. } = ins {
                out.push(ins.clone());
            }
        }
        out.push_adjoint(prog.instrs());
        out.registers = prog.registers.clone();
        out.meta = prog.meta.clone();
        out.to_circuit(Placement::Asap)
    }
}
