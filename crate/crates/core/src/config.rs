//! Numerical tolerances shared by every module.

/// All floating-point thresholds in one place.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of Σ|x|² from 1 after normalization.
    pub normalization: f64,
    /// Allowed deviation in the angle-tree parent-sum rule.
    pub tree: f64,
    /// Maximum |1⟩ mass on a clean qubit at deallocation.
    pub dealloc_mass: f64,
    /// Fidelity floor used by end-to-end checks.
    pub fidelity_floor: f64,
    /// Maximum drift of the total norm during simulation.
    pub norm_drift: f64,
    /// Amplitudes below this magnitude are dropped from the sparse state.
    pub prune: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        normalization: 1e-12,
        tree: 1e-12,
        dealloc_mass: 1e-10,
        fidelity_floor: 1e-9,
        norm_drift: 1e-9,
        prune: 1e-16,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Default cap on log₂ of the number of nonzero amplitudes in one simulated component.
pub const DEFAULT_MAX_QUBITS: usize = 26;

/// Environment variable that overrides [`DEFAULT_MAX_QUBITS`].
pub const MAX_QUBITS_ENV: &str = "QSPREP_MAX_QUBITS";

/// Reads the simulator cap from the environment, falling back to the default.
pub fn max_qubits_from_env() -> usize {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}
