use crate::error::{Error, Result};
use crate::gates::{ConditionalPhaseGate, ResonantSwapGate, RotationGate};
use crate::qubit::Qubit;
use crate::state::{StateVector, Unitary, MAX_QUBITS};

/// Classically known basis value of a qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisValue {
    Down,
    Up,
}

impl BasisValue {
    pub fn flipped(self) -> BasisValue {
        match self {
            BasisValue::Down => BasisValue::Up,
            BasisValue::Up => BasisValue::Down,
        }
    }

    pub fn is_up(self) -> bool {
        self == BasisValue::Up
    }
}

/// Hardware-agnostic circuit operations. Angles are in radians; `Measure`
/// reads one qubit of a parity pair and must form a trailing suffix.
#[derive(Clone, Debug)]
pub enum LogicalOp {
    Hadamard {
        qubit: Qubit,
    },
    RotateX {
        qubit: Qubit,
        angle_rad: f64,
    },
    RotateY {
        qubit: Qubit,
        angle_rad: f64,
    },
    RotateZ {
        qubit: Qubit,
        angle_rad: f64,
    },
    ControlledZ {
        a: Qubit,
        b: Qubit,
    },
    ControlledNot {
        control: Qubit,
        target: Qubit,
    },
    Toffoli {
        controls: (Qubit, Qubit),
        target: Qubit,
    },
    Measure {
        pair: (Qubit, Qubit),
        read: Qubit,
    },
}

impl LogicalOp {
    fn qubits(&self) -> Vec<Qubit> {
        match *self {
            LogicalOp::Hadamard { qubit }
            | LogicalOp::RotateX { qubit, .. }
            | LogicalOp::RotateY { qubit, .. }
            | LogicalOp::RotateZ { qubit, .. } => vec![qubit],
            LogicalOp::ControlledZ { a, b } => vec![a, b],
            LogicalOp::ControlledNot { control, target } => vec![control, target],
            LogicalOp::Toffoli { controls, target } => vec![controls.0, controls.1, target],
            LogicalOp::Measure { pair, .. } => vec![pair.0, pair.1],
        }
    }
}

#[derive(Clone, Debug)]
pub struct LogicalCircuit {
    n_qubits: usize,
    ops: Vec<LogicalOp>,
}

impl LogicalCircuit {
    pub fn new(n_qubits: usize, ops: Vec<LogicalOp>) -> Result<Self> {
        if n_qubits < 1 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        let mut measured = vec![false; n_qubits];
        let mut in_suffix = false;
        for op in &ops {
            check_distinct_in_range(&op.qubits(), n_qubits)?;
            if let LogicalOp::Measure { pair, read } = *op {
                in_suffix = true;
                if read != pair.0 && read != pair.1 {
                    return Err(Error::ReadNotInPair {
                        read,
                        pair0: pair.0,
                        pair1: pair.1,
                    });
                }
                for q in [pair.0, pair.1] {
                    if measured[q.index()] {
                        return Err(Error::DuplicateTarget(q));
                    }
                    measured[q.index()] = true;
                }
            } else if in_suffix {
                return Err(Error::MeasurementNotTrailing);
            }
        }
        Ok(LogicalCircuit { n_qubits, ops })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[LogicalOp] {
        &self.ops
    }
}

/// Joint parity measurement of a pair, reporting the state of `read` once the
/// partner's basis value is known.
#[derive(Clone, Copy, Debug)]
pub struct PairMeasure {
    pub pair: (Qubit, Qubit),
    pub read: Qubit,
    pub partner_value: Option<BasisValue>,
}

/// Operations the hardware executes directly.
#[derive(Clone, Debug)]
pub enum NativeOp {
    Rotation(RotationGate),
    CPhase(ConditionalPhaseGate),
    Swap(ResonantSwapGate),
    Idle { qubits: Vec<Qubit>, duration_s: f64 },
    PairMeasure(PairMeasure),
}

impl NativeOp {
    fn qubits(&self) -> Vec<Qubit> {
        match self {
            NativeOp::Rotation(g) => vec![g.qubit],
            NativeOp::CPhase(g) => vec![g.edge.0, g.edge.1],
            NativeOp::Swap(g) => vec![g.edge.0, g.edge.1],
            NativeOp::Idle { qubits, .. } => qubits.clone(),
            NativeOp::PairMeasure(m) => vec![m.pair.0, m.pair.1],
        }
    }

    pub fn duration_s(&self) -> f64 {
        match self {
            NativeOp::Rotation(g) => g.duration_s,
            NativeOp::CPhase(g) => g.pulse.duration_s,
            NativeOp::Swap(g) => g.pulse.duration_s,
            NativeOp::Idle { duration_s, .. } => *duration_s,
            NativeOp::PairMeasure(_) => 0.0,
        }
    }
}

/// A sequence of native operations plus the per-qubit virtual-z frame
/// diag(1, e^{i f}) pending at the end of the sequence.
#[derive(Clone, Debug)]
pub struct NativeCircuit {
    n_qubits: usize,
    ops: Vec<NativeOp>,
    frames: Vec<f64>,
}

impl NativeCircuit {
    pub fn new(n_qubits: usize, ops: Vec<NativeOp>, frames: Vec<f64>) -> Result<Self> {
        if n_qubits < 1 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        if frames.len() != n_qubits {
            return Err(Error::DimensionMismatch {
                dim: frames.len(),
                n_targets: n_qubits,
            });
        }
        let mut measured = vec![false; n_qubits];
        let mut in_suffix = false;
        for op in &ops {
            check_distinct_in_range(&op.qubits(), n_qubits)?;
            match op {
                NativeOp::Idle { duration_s, .. } => {
                    if !duration_s.is_finite() || *duration_s < 0.0 {
                        return Err(Error::InvalidDuration(*duration_s));
                    }
                }
                NativeOp::PairMeasure(m) => {
                    in_suffix = true;
                    if m.read != m.pair.0 && m.read != m.pair.1 {
                        return Err(Error::ReadNotInPair {
                            read: m.read,
                            pair0: m.pair.0,
                            pair1: m.pair.1,
                        });
                    }
                    for q in [m.pair.0, m.pair.1] {
                        if measured[q.index()] {
                            return Err(Error::DuplicateTarget(q));
                        }
                        measured[q.index()] = true;
                    }
                }
                _ => {}
            }
            if in_suffix && !matches!(op, NativeOp::PairMeasure(_)) {
                return Err(Error::MeasurementNotTrailing);
            }
        }
        Ok(NativeCircuit {
            n_qubits,
            ops,
            frames,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[NativeOp] {
        &self.ops
    }

    pub fn frames(&self) -> &[f64] {
        &self.frames
    }

    pub fn measurements(&self) -> impl Iterator<Item = &PairMeasure> {
        self.ops.iter().filter_map(|op| match op {
            NativeOp::PairMeasure(m) => Some(m),
            _ => None,
        })
    }

    /// Total pulse and idle time; measurements are not timed.
    pub fn total_duration_s(&self) -> f64 {
        self.ops.iter().map(|op| op.duration_s()).sum()
    }

    pub(crate) fn into_parts(self) -> (usize, Vec<NativeOp>, Vec<f64>) {
        (self.n_qubits, self.ops, self.frames)
    }

    /// Full-system unitary in the noiseless limit, with pending frames applied
    /// as a final diagonal. Idles are identity; measurements have no unitary.
    pub fn unitary(&self) -> Result<Unitary> {
        if self.n_qubits > 6 {
            return Err(Error::BadDimension(1 << self.n_qubits));
        }
        if self.ops.iter().any(|op| matches!(op, NativeOp::PairMeasure(_))) {
            return Err(Error::NonUnitaryCircuit);
        }
        let dim = 1usize << self.n_qubits;
        let mut entries = vec![num_complex::Complex64::ZERO; dim * dim];
        let mut s = StateVector::new(self.n_qubits)?;
        for col in 0..dim {
            s.set_basis_state(col)?;
            for op in &self.ops {
                match op {
                    NativeOp::Rotation(g) => s.apply(&g.unitary(), &[g.qubit])?,
                    NativeOp::CPhase(g) => s.apply(&g.unitary(), &[g.edge.0, g.edge.1])?,
                    NativeOp::Swap(g) => s.apply(&g.unitary(), &[g.edge.0, g.edge.1])?,
                    NativeOp::Idle { .. } => {}
                    NativeOp::PairMeasure(_) => unreachable!(),
                }
            }
            for q in 0..self.n_qubits {
                s.apply_up_phase(Qubit(q as u8), self.frames[q])?;
            }
            for row in 0..dim {
                entries[row * dim + col] = s.amplitudes()[row];
            }
        }
        Unitary::new(dim, entries)
    }
}

fn check_distinct_in_range(qubits: &[Qubit], n_qubits: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q.index() >= n_qubits {
            return Err(Error::IndexOutOfRange { qubit: q, n_qubits });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::DuplicateTarget(q));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{cphase_gate, PulseSettings, RotationGate, DEFAULT_RABI_HZ};
    use crate::qubit::{Q1, Q2, Q3, Q4};
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rot(q: Qubit, theta: f64, phi: f64) -> NativeOp {
        NativeOp::Rotation(RotationGate::new(q, theta, phi, DEFAULT_RABI_HZ))
    }

    #[test]
    fn logical_circuit_rejects_mid_circuit_measurement() {
        let err = LogicalCircuit::new(
            2,
            vec![
                LogicalOp::Measure {
                    pair: (Q1, Q2),
                    read: Q1,
                },
                LogicalOp::Hadamard { qubit: Q1 },
            ],
        );
        assert!(matches!(err, Err(Error::MeasurementNotTrailing)));
    }

    #[test]
    fn logical_circuit_rejects_duplicate_toffoli_qubits() {
        let err = LogicalCircuit::new(
            3,
            vec![LogicalOp::Toffoli {
                controls: (Q1, Q2),
                target: Q2,
            }],
        );
        assert!(matches!(err, Err(Error::DuplicateTarget(_))));
    }

    #[test]
    fn logical_circuit_rejects_read_outside_pair() {
        let err = LogicalCircuit::new(
            3,
            vec![LogicalOp::Measure {
                pair: (Q1, Q2),
                read: Q3,
            }],
        );
        assert!(matches!(err, Err(Error::ReadNotInPair { .. })));
    }

    #[test]
    fn logical_circuit_rejects_out_of_range() {
        let err = LogicalCircuit::new(2, vec![LogicalOp::Hadamard { qubit: Q3 }]);
        assert!(matches!(err, Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn native_circuit_rejects_overlapping_measured_pairs() {
        let m = |pair, read| {
            NativeOp::PairMeasure(PairMeasure {
                pair,
                read,
                partner_value: None,
            })
        };
        let err = NativeCircuit::new(3, vec![m((Q1, Q2), Q1), m((Q2, Q3), Q3)], vec![0.0; 3]);
        assert!(matches!(err, Err(Error::DuplicateTarget(_))));
    }

    #[test]
    fn native_circuit_rejects_negative_idle() {
        let err = NativeCircuit::new(
            1,
            vec![NativeOp::Idle {
                qubits: vec![Q1],
                duration_s: -1e-6,
            }],
            vec![0.0],
        );
        assert!(matches!(err, Err(Error::InvalidDuration(_))));
    }

    #[test]
    fn native_circuit_rejects_frame_length_mismatch() {
        let err = NativeCircuit::new(2, vec![], vec![0.0]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn unitary_of_single_rotation_embeds_correctly() {
        let theta = 0.9;
        let circ = NativeCircuit::new(3, vec![rot(Q2, theta, 0.3)], vec![0.0; 3]).unwrap();
        let u = circ.unitary().unwrap();
        let g = RotationGate::new(Q2, theta, 0.3, DEFAULT_RABI_HZ).unitary();
        let mut s = StateVector::new(3).unwrap();
        s.set_basis_state(5).unwrap();
        s.apply(&g, &[Q2]).unwrap();
        for row in 0..8 {
            assert!((u.get(row, 5) - s.amplitudes()[row]).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_composes_in_time_order() {
        let a = RotationGate::new(Q1, 0.7, 0.1, DEFAULT_RABI_HZ);
        let b = RotationGate::new(Q1, 1.3, 1.9, DEFAULT_RABI_HZ);
        let circ = NativeCircuit::new(
            1,
            vec![NativeOp::Rotation(a), NativeOp::Rotation(b)],
            vec![0.0],
        )
        .unwrap();
        let u = circ.unitary().unwrap();
        let expect = b.unitary().mul(&a.unitary()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((u.get(i, j) - expect.get(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn frames_apply_as_final_diagonal() {
        let circ = NativeCircuit::new(2, vec![], vec![0.0, FRAC_PI_2]).unwrap();
        let u = circ.unitary().unwrap();
        for i in 0..4 {
            let expect = if i & 2 != 0 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::ONE
            };
            assert!((u.get(i, i) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn idle_is_identity_in_unitary() {
        let circ = NativeCircuit::new(
            2,
            vec![NativeOp::Idle {
                qubits: vec![Q1, Q2],
                duration_s: 1e-6,
            }],
            vec![0.0; 2],
        )
        .unwrap();
        let u = circ.unitary().unwrap();
        let id = Unitary::identity(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((u.get(i, j) - id.get(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cphase_unitary_is_order_insensitive() {
        let dev = crate::device::DeviceModel::default();
        let g = cphase_gate((Q3, Q4), PI, &dev, &PulseSettings::default()).unwrap();
        let mut g_rev = g;
        g_rev.edge = (Q4, Q3);
        let u = NativeCircuit::new(4, vec![NativeOp::CPhase(g)], vec![0.0; 4])
            .unwrap()
            .unitary()
            .unwrap();
        let v = NativeCircuit::new(4, vec![NativeOp::CPhase(g_rev)], vec![0.0; 4])
            .unwrap()
            .unitary()
            .unwrap();
        for i in 0..16 {
            assert!((u.get(i, i) - v.get(i, i)).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_refuses_measurements() {
        let circ = NativeCircuit::new(
            2,
            vec![NativeOp::PairMeasure(PairMeasure {
                pair: (Q1, Q2),
                read: Q1,
                partner_value: None,
            })],
            vec![0.0; 2],
        )
        .unwrap();
        assert!(matches!(circ.unitary(), Err(Error::NonUnitaryCircuit)));
    }

    #[test]
    fn unitary_refuses_more_than_six_qubits() {
        let circ = NativeCircuit::new(7, vec![], vec![0.0; 7]).unwrap();
        assert!(matches!(circ.unitary(), Err(Error::BadDimension(_))));
    }

    #[test]
    fn total_duration_sums_ops() {
        let circ = NativeCircuit::new(
            2,
            vec![
                rot(Q1, FRAC_PI_2, 0.0),
                NativeOp::Idle {
                    qubits: vec![Q1, Q2],
                    duration_s: 2e-6,
                },
            ],
            vec![0.0; 2],
        )
        .unwrap();
        let rot_time = 0.25 / DEFAULT_RABI_HZ;
        assert!((circ.total_duration_s() - (rot_time + 2e-6)).abs() < 1e-15);
    }
}
