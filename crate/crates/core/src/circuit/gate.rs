use std::f64::consts::FRAC_PI_4;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Logical qubit identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitId(pub u32);

impl QubitId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitKind {
    Clean,
    Dirty,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    X,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Z,
    Ry(f64),
    Rz(f64),
    Phase(f64),
    Cnot,
    Swap,
    Cswap,
    Toffoli,
    CRy(f64),
    CCRy(f64),
    CRz(f64),
    CCRz(f64),
}

pub type Mat2 = [[Complex64; 2]; 2];

/// What a gate does once its controls are all |1⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Action {
    Unitary(Mat2),
    Swap,
}

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const ZERO: Complex64 = c(0.0, 0.0);
const ONE: Complex64 = c(1.0, 0.0);

impl GateKind {
    pub fn arity(&self) -> usize {
        use GateKind::*;
        match self {
            X | H | S | Sdg | T | Tdg | Z | Ry(_) | Rz(_) | Phase(_) => 1,
            Cnot | Swap | CRy(_) | CRz(_) => 2,
            Cswap | Toffoli | CCRy(_) | CCRz(_) => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        use GateKind::*;
        match self {
            X => "x",
            H => "h",
            S => "s",
            Sdg => "sdg",
            T => "t",
            Tdg => "tdg",
            Z => "z",
            Ry(_) => "ry",
            Rz(_) => "rz",
            Phase(_) => "phase",
            Cnot => "cnot",
            Swap => "swap",
            Cswap => "cswap",
            Toffoli => "toffoli",
            CRy(_) => "cry",
            CCRy(_) => "ccry",
            CRz(_) => "crz",
            CCRz(_) => "ccrz",
        }
    }

    pub fn param(&self) -> Option<f64> {
        use GateKind::*;
        match *self {
            Ry(t) | Rz(t) | Phase(t) | CRy(t) | CCRy(t) | CRz(t) | CCRz(t) => Some(t),
            _ => None,
        }
    }

    pub fn from_name(name: &str, params: &[f64]) -> Option<GateKind> {
        use GateKind::*;
        let fixed = match name {
            "x" => Some(X),
            "h" => Some(H),
            "s" => Some(S),
            "sdg" => Some(Sdg),
            "t" => Some(T),
            "tdg" => Some(Tdg),
            "z" => Some(Z),
            "cnot" => Some(Cnot),
            "swap" => Some(Swap),
            "cswap" => Some(Cswap),
            "toffoli" => Some(Toffoli),
            _ => None,
        };
        if let Some(g) = fixed {
            return params.is_empty().then_some(g);
        }
        let &[t] = params else { return None };
        Some(match name {
            "ry" => Ry(t),
            "rz" => Rz(t),
            "phase" => Phase(t),
            "cry" => CRy(t),
            "ccry" => CCRy(t),
            "crz" => CRz(t),
            "ccrz" => CCRz(t),
            _ => return None,
        })
    }

    /// Gates charged a synthesis cost under the approximate model.
    pub fn is_rotation(&self) -> bool {
        self.param().is_some()
    }

    pub fn is_t_type(&self) -> bool {
        matches!(self, GateKind::T | GateKind::Tdg)
    }

    pub fn adjoint(&self) -> GateKind {
        use GateKind::*;
        match *self {
            S => Sdg,
            Sdg => S,
            T => Tdg,
            Tdg => T,
            Ry(t) => Ry(-t),
            Rz(t) => Rz(-t),
            Phase(t) => Phase(-t),
            CRy(t) => CRy(-t),
            CCRy(t) => CCRy(-t),
            CRz(t) => CRz(-t),
            CCRz(t) => CCRz(-t),
            g => g,
        }
    }

    /// Number of leading operands that act as controls.
    pub fn controls(&self) -> usize {
        use GateKind::*;
        match self {
            Cnot | CRy(_) | CRz(_) | Cswap => 1,
            Toffoli | CCRy(_) | CCRz(_) => 2,
            _ => 0,
        }
    }

    pub fn action(&self) -> Action {
        use GateKind::*;
        let x: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
        match *self {
            Swap | Cswap => Action::Swap,
            X | Cnot | Toffoli => Action::Unitary(x),
            H => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                Action::Unitary([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
            }
            S => Action::Unitary(diag(ONE, c(0.0, 1.0))),
            Sdg => Action::Unitary(diag(ONE, c(0.0, -1.0))),
            T => Action::Unitary(diag(ONE, Complex64::from_polar(1.0, FRAC_PI_4))),
            Tdg => Action::Unitary(diag(ONE, Complex64::from_polar(1.0, -FRAC_PI_4))),
            Z => Action::Unitary(diag(ONE, c(-1.0, 0.0))),
            Phase(t) => Action::Unitary(diag(ONE, Complex64::from_polar(1.0, t))),
            Ry(t) | CRy(t) | CCRy(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                Action::Unitary([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
            }
            Rz(t) | CRz(t) | CCRz(t) => Action::Unitary(diag(
                Complex64::from_polar(1.0, -t / 2.0),
                Complex64::from_polar(1.0, t / 2.0),
            )),
        }
    }
}

fn diag(a: Complex64, b: Complex64) -> Mat2 {
    [[a, ZERO], [ZERO, b]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: SmallVec<[QubitId; 3]>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[QubitId]) -> Self {
        Gate { kind, qubits: SmallVec::from_slice(qubits) }
    }

    pub fn adjoint(&self) -> Gate {
        Gate { kind: self.kind.adjoint(), qubits: self.qubits.clone() }
    }

    pub fn has_duplicates(&self) -> bool {
        let q = &self.qubits;
        (0..q.len()).any(|i| (i + 1..q.len()).any(|j| q[i] == q[j]))
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind.param() {
            Some(t) => write!(f, "{}({})", self.kind.name(), t)?,
            None => write!(f, "{}", self.kind.name())?,
        }
        for (i, q) in self.qubits.iter().enumerate() {
            write!(f, "{}{}", if i == 0 { " " } else { ", " }, q)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let all = [
            GateKind::X,
            GateKind::H,
            GateKind::S,
            GateKind::Sdg,
            GateKind::T,
            GateKind::Tdg,
            GateKind::Z,
            GateKind::Ry(0.3),
            GateKind::Rz(-1.0),
            GateKind::Phase(2.0),
            GateKind::Cnot,
            GateKind::Swap,
            GateKind::Cswap,
            GateKind::Toffoli,
            GateKind::CRy(0.1),
            GateKind::CCRy(0.2),
            GateKind::CRz(0.4),
            GateKind::CCRz(0.5),
        ];
        for g in all {
            let p: Vec<f64> = g.param().into_iter().collect();
            assert_eq!(GateKind::from_name(g.name(), &p), Some(g));
            assert_eq!(g.adjoint().adjoint(), g);
            assert!(g.controls() < g.arity());
        }
        assert_eq!(GateKind::from_name("ry", &[]), None);
        assert_eq!(GateKind::from_name("x", &[1.0]), None);
    }

    #[test]
    fn display_is_qasm_like() {
        let g = Gate::new(GateKind::Cnot, &[QubitId(3), QubitId(7)]);
        assert_eq!(g.to_string(), "cnot q3, q7");
        assert!(Gate::new(GateKind::Swap, &[QubitId(1), QubitId(1)]).has_duplicates());
    }
}
