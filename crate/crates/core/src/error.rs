use crate::qubit::Qubit;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={max}", max = crate::state::MAX_QUBITS)]
    Size(usize),
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    IndexOutOfRange { qubit: Qubit, n_qubits: usize },
    #[error("duplicate target qubit {0}")]
    DuplicateTarget(Qubit),
    #[error("matrix dimension {dim} does not match {n_targets} target qubit(s)")]
    DimensionMismatch { dim: usize, n_targets: usize },
    #[error("matrix dimension {0} is not 2^k for k in 1..=6")]
    BadDimension(usize),
    #[error("matrix is not unitary: max |U U\u{2020} - I| entry = {0:.3e}")]
    NotUnitary(f64),
    #[error("degenerate pulse: duration must be positive")]
    DegeneratePulse,
    #[error("no pulse reaches conditional phase {target_phase_rad} rad under the given constraints")]
    Calibration { target_phase_rad: f64 },
    #[error("modulation frequency {f_mod_hz} Hz is off resonance (edge splitting difference {delta_hz} Hz, tolerance {tol_hz} Hz)")]
    OffResonance {
        f_mod_hz: f64,
        delta_hz: f64,
        tol_hz: f64,
    },
    #[error("edge ({0}, {1}) is not in the device connectivity")]
    MissingEdge(Qubit, Qubit),
    #[error("({0}, {1}) is not a readout pair")]
    NotAReadoutPair(Qubit, Qubit),
    #[error("read qubit {read} is not a member of pair ({pair0}, {pair1})")]
    ReadNotInPair {
        read: Qubit,
        pair0: Qubit,
        pair1: Qubit,
    },
    #[error("cannot read {read}: partner {partner} is in an unknown state and no reset helper is available")]
    ReadoutConstraint { read: Qubit, partner: Qubit },
    #[error("circuit contains non-unitary elements; no single unitary exists")]
    NonUnitaryCircuit,
    #[error("measurement must be a trailing suffix of the circuit")]
    MeasurementNotTrailing,
    #[error("inconsistent coherence times: t2_star {t2_star_s} s exceeds t2_hahn {t2_hahn_s} s")]
    InconsistentCoherence { t2_star_s: f64, t2_hahn_s: f64 },
    #[error("invalid duration {0} s: must be non-negative and finite")]
    InvalidDuration(f64),
    #[error("{name} = {value} outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("injection index {0} exceeds circuit length")]
    Injection(usize),
    #[error("exact estimator cannot evaluate this circuit: {0}")]
    Estimator(String),
    #[error("fit input invalid: {0}")]
    FitInput(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("fit failed: contrast {contrast:.3e} below 5x mean uncertainty {mean_err:.3e}")]
    FitContrast { contrast: f64, mean_err: f64 },
    #[error("no sign change for the crossing search in ({lo}, {hi})")]
    NoCrossing { lo: f64, hi: f64 },
}
