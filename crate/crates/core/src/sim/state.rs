//! Sparse statevector split into independent components.
//!
//! Each component stores its nonzero amplitudes keyed by a bit string over
//! its own slots. Components are merged only when a multi-qubit gate touches
//! more than one of them, so product-form parts of the state stay small.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use num_complex::Complex64;
use smallvec::{smallvec, SmallVec};

use super::SimError;
use crate::circuit::{Action, GateKind};

type Key = SmallVec<[u64; 2]>;
type AmpMap = HashMap<Key, Complex64, BuildHasherDefault<DefaultHasher>>;

/// Simulator-internal qubit handle; one per allocation.
pub type Handle = usize;

fn bit(k: &Key, s: usize) -> bool {
    (k[s >> 6] >> (s & 63)) & 1 == 1
}

fn set_bit(k: &mut Key, s: usize, v: bool) {
    if v {
        k[s >> 6] |= 1 << (s & 63);
    } else {
        k[s >> 6] &= !(1 << (s & 63));
    }
}

fn flip(k: &mut Key, s: usize) {
    k[s >> 6] ^= 1 << (s & 63);
}

fn new_map(cap: usize) -> AmpMap {
    AmpMap::with_capacity_and_hasher(cap, Default::default())
}

#[derive(Clone, Debug)]
struct Component {
    slots: Vec<Option<Handle>>,
    free: Vec<usize>,
    words: usize,
    amps: AmpMap,
}

impl Component {
    fn empty() -> Self {
        let mut amps = new_map(1);
        amps.insert(smallvec![0u64], Complex64::new(1.0, 0.0));
        Component { slots: Vec::new(), free: Vec::new(), words: 1, amps }
    }

    fn take_slot(&mut self, h: Handle) -> usize {
        if let Some(s) = self.free.pop() {
            self.slots[s] = Some(h);
            return s;
        }
        self.slots.push(Some(h));
        let need = self.slots.len().div_ceil(64);
        if need > self.words {
            let old = std::mem::take(&mut self.amps);
            self.amps = old
                .into_iter()
                .map(|(mut k, a)| {
                    k.resize(need, 0);
                    (k, a)
                })
                .collect();
            self.words = need;
        }
        self.slots.len() - 1
    }

    fn live(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct SparseState {
    comps: Vec<Option<Component>>,
    loc: HashMap<Handle, (usize, usize), BuildHasherDefault<DefaultHasher>>,
    scalar: Complex64,
    max_support: usize,
    prune: f64,
    live: usize,
    peak_live: usize,
    peak_support: usize,
}

impl SparseState {
    /// `cap` bounds log₂ of the number of nonzero amplitudes in any component.
    pub fn new(cap: usize, prune: f64) -> Self {
        SparseState {
            comps: Vec::new(),
            loc: Default::default(),
            scalar: Complex64::new(1.0, 0.0),
            max_support: 1usize.checked_shl(cap as u32).unwrap_or(usize::MAX),
            prune,
            live: 0,
            peak_live: 0,
            peak_support: 1,
        }
    }

    pub fn peak_live(&self) -> usize {
        self.peak_live
    }

    pub fn peak_support(&self) -> usize {
        self.peak_support
    }

    pub fn scalar(&self) -> Complex64 {
        self.scalar
    }

    pub fn is_live(&self, h: Handle) -> bool {
        self.loc.contains_key(&h)
    }

    pub fn live_handles(&self) -> Vec<Handle> {
        let mut v: Vec<Handle> = self.loc.keys().copied().collect();
        v.sort_unstable();
        v
    }

    fn bump_live(&mut self, by: usize) {
        self.live += by;
        self.peak_live = self.peak_live.max(self.live);
    }

    fn insert_comp(&mut self, c: Component) -> usize {
        self.comps.push(Some(c));
        self.comps.len() - 1
    }

    /// Allocates `h` in the single-qubit state a₀|0⟩ + a₁|1⟩.
    pub fn alloc(&mut self, h: Handle, amp: [Complex64; 2]) {
        self.alloc_group(&[h], &amp);
    }

    /// Allocates `hs` jointly in the dense state `vec` (first handle is the
    /// most significant bit).
    pub fn alloc_group(&mut self, hs: &[Handle], vec: &[Complex64]) {
        assert_eq!(vec.len(), 1 << hs.len(), "state length must be 2^k");
        let mut c = Component::empty();
        c.amps.clear();
        let slots: Vec<usize> = hs.iter().map(|&h| c.take_slot(h)).collect();
        let l = hs.len();
        for (i, &a) in vec.iter().enumerate() {
            if a.norm() <= self.prune {
                continue;
            }
            let mut k: Key = smallvec![0u64; c.words];
            for (t, &s) in slots.iter().enumerate() {
                set_bit(&mut k, s, (i >> (l - 1 - t)) & 1 == 1);
            }
            c.amps.insert(k, a);
        }
        self.peak_support = self.peak_support.max(c.amps.len());
        let idx = self.insert_comp(c);
        for (&h, &s) in hs.iter().zip(&slots) {
            self.loc.insert(h, (idx, s));
        }
        self.bump_live(hs.len());
    }

    fn locate(&self, h: Handle) -> Result<(usize, usize), SimError> {
        self.loc.get(&h).copied().ok_or(SimError::UnknownHandle(h))
    }

    /// Moves component `src` into component `dst`.
    fn merge(&mut self, dst: usize, src: usize) -> Result<(), SimError> {
        let s = self.comps[src].take().expect("live component");
        let d = self.comps[dst].as_mut().expect("live component");
        let mut moves = Vec::new();
        for (slot, h) in s.slots.iter().enumerate() {
            if let Some(h) = *h {
                moves.push((slot, d.take_slot(h), h));
            }
        }
        let product = d.amps.len().saturating_mul(s.amps.len());
        if product > self.max_support {
            return Err(SimError::PeakQubitsExceeded { support: product, cap: self.max_support });
        }
        let mut out = new_map(product);
        for (k1, a1) in &d.amps {
            for (k2, a2) in &s.amps {
                let mut k = k1.clone();
                for &(from, to, _) in &moves {
                    if bit(k2, from) {
                        set_bit(&mut k, to, true);
                    }
                }
                out.insert(k, a1 * a2);
            }
        }
        d.amps = out;
        self.peak_support = self.peak_support.max(d.amps.len());
        for (_, to, h) in moves {
            self.loc.insert(h, (dst, to));
        }
        Ok(())
    }

    /// Applies `kind` to the handles in operand order.
    pub fn apply(&mut self, kind: GateKind, hs: &[Handle]) -> Result<(), SimError> {
        let mut comp_ids: SmallVec<[usize; 3]> = SmallVec::new();
        for &h in hs {
            let (c, _) = self.locate(h)?;
            if !comp_ids.contains(&c) {
                comp_ids.push(c);
            }
        }
        comp_ids.sort_by_key(|&c| std::cmp::Reverse(self.comps[c].as_ref().map_or(0, |x| x.amps.len())));
        let base = comp_ids[0];
        for &other in &comp_ids[1..] {
            self.merge(base, other)?;
        }
        let slots: SmallVec<[usize; 3]> = hs.iter().map(|&h| self.loc[&h].1).collect();
        let nctrl = kind.controls();
        let (ctrl, tgt) = slots.split_at(nctrl);
        let prune = self.prune;
        let comp = self.comps[base].as_mut().expect("live component");
        let on = |k: &Key| ctrl.iter().all(|&c| bit(k, c));
        match kind.action() {
            Action::Swap => {
                let (a, b) = (tgt[0], tgt[1]);
                let old = std::mem::take(&mut comp.amps);
                let mut out = new_map(old.len());
                for (mut k, v) in old {
                    if on(&k) && bit(&k, a) != bit(&k, b) {
                        flip(&mut k, a);
                        flip(&mut k, b);
                    }
                    out.insert(k, v);
                }
                comp.amps = out;
            }
            Action::Unitary(u) => {
                let t = tgt[0];
                let zero = Complex64::new(0.0, 0.0);
                if u[0][1] == zero && u[1][0] == zero {
                    for (k, v) in comp.amps.iter_mut() {
                        if on(k) {
                            *v *= if bit(k, t) { u[1][1] } else { u[0][0] };
                        }
                    }
                } else if u[0][0] == zero && u[1][1] == zero {
                    let old = std::mem::take(&mut comp.amps);
                    let mut out = new_map(old.len());
                    for (mut k, v) in old {
                        if on(&k) {
                            let b = bit(&k, t);
                            flip(&mut k, t);
                            let f = if b { u[0][1] } else { u[1][0] };
                            out.insert(k, v * f);
                        } else {
                            out.insert(k, v);
                        }
                    }
                    comp.amps = out;
                } else {
                    let old = std::mem::take(&mut comp.amps);
                    let mut out = new_map(old.len() * 2);
                    for (k, v) in old {
                        if !on(&k) {
                            *out.entry(k).or_insert(zero) += v;
                            continue;
                        }
                        let b = usize::from(bit(&k, t));
                        let mut k0 = k.clone();
                        set_bit(&mut k0, t, false);
                        let mut k1 = k;
                        set_bit(&mut k1, t, true);
                        *out.entry(k0).or_insert(zero) += u[0][b] * v;
                        *out.entry(k1).or_insert(zero) += u[1][b] * v;
                    }
                    out.retain(|_, v| v.norm() > prune);
                    comp.amps = out;
                }
            }
        }
        let support = comp.amps.len();
        self.peak_support = self.peak_support.max(support);
        if support > self.max_support {
            return Err(SimError::PeakQubitsExceeded { support, cap: self.max_support });
        }
        Ok(())
    }

    /// Probability of reading |1⟩ on `h`, relative to its component norm.
    pub fn one_mass(&self, h: Handle) -> Result<f64, SimError> {
        let (c, s) = self.locate(h)?;
        let comp = self.comps[c].as_ref().expect("live component");
        let total = comp.norm_sqr();
        let ones: f64 = comp.amps.iter().filter(|(k, _)| bit(k, s)).map(|(_, a)| a.norm_sqr()).sum();
        Ok(if total > 0.0 { ones / total } else { 0.0 })
    }

    fn finish_release(&mut self, h: Handle, c: usize, s: usize) {
        self.loc.remove(&h);
        self.live -= 1;
        let comp = self.comps[c].as_mut().expect("live component");
        comp.slots[s] = None;
        comp.free.push(s);
        if comp.live() == 0 {
            let comp = self.comps[c].take().expect("live component");
            let a: Complex64 = comp.amps.values().sum();
            self.scalar *= a;
        }
    }

    /// Removes `h`, keeping only its |0⟩ branch. Returns the discarded |1⟩ mass.
    pub fn release_zero(&mut self, h: Handle) -> Result<f64, SimError> {
        let mass = self.one_mass(h)?;
        let (c, s) = self.locate(h)?;
        let comp = self.comps[c].as_mut().expect("live component");
        comp.amps.retain(|k, _| !bit(k, s));
        self.finish_release(h, c, s);
        Ok(mass)
    }

    /// Removes `h` by projecting it onto `seed`. Returns the retained probability.
    pub fn release_onto(&mut self, h: Handle, seed: [Complex64; 2]) -> Result<f64, SimError> {
        let (c, s) = self.locate(h)?;
        let prune = self.prune;
        let comp = self.comps[c].as_mut().expect("live component");
        let total = comp.norm_sqr();
        let old = std::mem::take(&mut comp.amps);
        let mut out = new_map(old.len());
        for (mut k, v) in old {
            let coef = if bit(&k, s) { seed[1].conj() } else { seed[0].conj() };
            set_bit(&mut k, s, false);
            *out.entry(k).or_insert(Complex64::new(0.0, 0.0)) += coef * v;
        }
        out.retain(|_, v| v.norm() > prune);
        let kept: f64 = out.values().map(|a| a.norm_sqr()).sum();
        comp.amps = out;
        self.finish_release(h, c, s);
        Ok(if total > 0.0 { kept / total } else { 0.0 })
    }

    /// Product of all component norms, times |scalar|².
    pub fn norm_sqr(&self) -> f64 {
        self.comps.iter().flatten().map(Component::norm_sqr).product::<f64>() * self.scalar.norm_sqr()
    }

    /// Dense amplitudes over `hs` (first handle most significant), without
    /// the accumulated global scalar. Every component touching `hs` must be
    /// fully contained in `hs`; handles that are not live read as |0⟩.
    pub fn dense_unscaled(&self, hs: &[Handle]) -> Result<Vec<Complex64>, SimError> {
        let pos: HashMap<Handle, usize> = hs.iter().enumerate().map(|(i, &h)| (h, hs.len() - 1 - i)).collect();
        let mut comps: Vec<usize> = hs.iter().filter_map(|h| self.loc.get(h).map(|l| l.0)).collect();
        comps.sort_unstable();
        comps.dedup();
        let mut cur: Vec<(usize, Complex64)> = vec![(0, Complex64::new(1.0, 0.0))];
        for c in comps {
            let comp = self.comps[c].as_ref().expect("live component");
            let mut map: Vec<(usize, usize)> = Vec::new();
            for (slot, h) in comp.slots.iter().enumerate() {
                if let Some(h) = h {
                    let p = pos.get(h).ok_or(SimError::Entangled(*h))?;
                    map.push((slot, *p));
                }
            }
            let mut entries: Vec<(usize, Complex64)> = comp
                .amps
                .iter()
                .map(|(k, a)| (map.iter().filter(|(s, _)| bit(k, *s)).map(|(_, p)| 1usize << p).sum(), *a))
                .collect();
            entries.sort_by_key(|e| e.0);
            let mut next = Vec::with_capacity(cur.len() * entries.len());
            for &(i, a) in &cur {
                for &(j, b) in &entries {
                    next.push((i | j, a * b));
                }
            }
            cur = next;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); 1usize << hs.len()];
        for (i, a) in cur {
            out[i] += a;
        }
        Ok(out)
    }

    /// Dense amplitudes over `hs` including the global scalar. When a component
    /// reaches outside `hs`, the state is split as ψ_hs ⊗ φ_rest with φ
    /// normalized to 1 at its largest entry; this fails with
    /// [`SimError::Entangled`] unless the split is exact.
    pub fn dense(&self, hs: &[Handle]) -> Result<Vec<Complex64>, SimError> {
        let s = self.scalar;
        let v = match self.dense_unscaled(hs) {
            Ok(v) => v,
            Err(SimError::Entangled(_)) => self.dense_factored(hs)?,
            Err(e) => return Err(e),
        };
        Ok(v.into_iter().map(|a| a * s).collect())
    }

    fn dense_factored(&self, hs: &[Handle]) -> Result<Vec<Complex64>, SimError> {
        const MAX_JOINT: usize = 24;
        let mut rest: Vec<Handle> = Vec::new();
        for &h in hs {
            if self.loc.contains_key(&h) {
                for o in self.component_of(h)? {
                    if !hs.contains(&o) && !rest.contains(&o) {
                        rest.push(o);
                    }
                }
            }
        }
        let Some(&first_rest) = rest.first() else {
            return self.dense_unscaled(hs);
        };
        if hs.len() + rest.len() > MAX_JOINT {
            return Err(SimError::Entangled(first_rest));
        }
        let mut all = hs.to_vec();
        all.extend(&rest);
        let joint = self.dense_unscaled(&all)?;
        let cols = 1usize << rest.len();
        let (pivot, _) = joint
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, a)| if a.norm() > best.1 { (i, a.norm()) } else { best });
        let (pi, pj) = (pivot / cols, pivot % cols);
        let lead = joint[pivot];
        let a: Vec<Complex64> = (0..1usize << hs.len()).map(|i| joint[i * cols + pj]).collect();
        let b: Vec<Complex64> = (0..cols).map(|j| joint[pi * cols + j] / lead).collect();
        let scale = lead.norm().max(1.0);
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if (joint[i * cols + j] - ai * bj).norm() > 1e-9 * scale {
                    return Err(SimError::Entangled(first_rest));
                }
            }
        }
        let bn = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        Ok(a.into_iter().map(|x| x * bn).collect())
    }

    /// Nonzero amplitudes of the component holding `h`, as (handles, entries)
    /// with entries indexed in the handle order given.
    pub fn component_of(&self, h: Handle) -> Result<Vec<Handle>, SimError> {
        let (c, _) = self.locate(h)?;
        let comp = self.comps[c].as_ref().expect("live component");
        Ok(comp.slots.iter().flatten().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn bell_pair_and_release() {
        let mut s = SparseState::new(26, 1e-14);
        s.alloc(0, [c(1.0), c(0.0)]);
        s.alloc(1, [c(1.0), c(0.0)]);
        s.apply(GateKind::H, &[0]).unwrap();
        s.apply(GateKind::Cnot, &[0, 1]).unwrap();
        let d = s.dense(&[0, 1]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d[0].re - h).abs() < 1e-15 && (d[3].re - h).abs() < 1e-15);
        assert!((s.one_mass(1).unwrap() - 0.5).abs() < 1e-15);
        s.apply(GateKind::Cnot, &[0, 1]).unwrap();
        assert!(s.release_zero(1).unwrap() < 1e-30);
        assert!(matches!(s.dense(&[1]), Ok(_)));
        assert!(matches!(s.dense_unscaled(&[5]), Ok(v) if v[0] == c(1.0)));
    }

    #[test]
    fn wide_components_extend_keys() {
        let mut s = SparseState::new(26, 1e-14);
        for h in 0..130 {
            s.alloc(h, [c(1.0), c(0.0)]);
        }
        s.apply(GateKind::H, &[0]).unwrap();
        for h in 1..130 {
            s.apply(GateKind::Cnot, &[h - 1, h]).unwrap();
        }
        assert_eq!(s.component_of(0).unwrap().len(), 130);
        assert!((s.one_mass(129).unwrap() - 0.5).abs() < 1e-12);
        s.apply(GateKind::Swap, &[3, 129]).unwrap();
        s.apply(GateKind::Cswap, &[128, 3, 4]).unwrap();
        assert_eq!(s.peak_live(), 130);
    }

    #[test]
    fn support_cap_enforced() {
        let mut s = SparseState::new(2, 1e-14);
        for h in 0..3 {
            s.alloc(h, [c(1.0), c(0.0)]);
            s.apply(GateKind::H, &[h]).unwrap();
        }
        s.apply(GateKind::Cnot, &[0, 1]).unwrap();
        assert!(matches!(s.apply(GateKind::Cnot, &[1, 2]), Err(SimError::PeakQubitsExceeded { .. })));
    }

    #[test]
    fn global_phase_survives_release() {
        let mut s = SparseState::new(26, 1e-14);
        s.alloc(0, [c(1.0), c(0.0)]);
        s.apply(GateKind::X, &[0]).unwrap();
        s.apply(GateKind::Z, &[0]).unwrap();
        s.apply(GateKind::X, &[0]).unwrap();
        s.release_zero(0).unwrap();
        assert_eq!(s.scalar(), c(-1.0));
    }
}
