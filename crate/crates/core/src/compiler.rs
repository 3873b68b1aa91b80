use crate::circuit::{
    BasisValue, LogicalCircuit, LogicalOp, NativeCircuit, NativeOp, PairMeasure,
};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::gates::{calibrate_swap, cphase_gate, toffoli_like, wrap_phase, PulseSettings, RotationGate};
use crate::qubit::Qubit;
use crate::state::{StateVector, Unitary};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Rotation angles within this tolerance of 0 or pi are treated as identity
/// or bit flip by the classical value tracker.
const ANGLE_TOL: f64 = 1e-9;

/// Incremental translator from logical operations to native pulses.
///
/// Z rotations are virtual: they accumulate in per-qubit frames and shift the
/// axes of later physical rotations instead of emitting pulses. A Hadamard
/// lowers to an inverse y rotation plus a pi frame advance.
pub struct Lowering<'a> {
    device: &'a DeviceModel,
    pulses: PulseSettings,
    ops: Vec<NativeOp>,
    frames: Vec<f64>,
}

impl<'a> Lowering<'a> {
    pub fn new(device: &'a DeviceModel, pulses: PulseSettings) -> Self {
        Lowering {
            device,
            pulses,
            ops: Vec::new(),
            frames: vec![0.0; device.n_qubits()],
        }
    }

    fn check(&self, q: Qubit) -> Result<()> {
        if q.index() >= self.frames.len() {
            return Err(Error::IndexOutOfRange {
                qubit: q,
                n_qubits: self.frames.len(),
            });
        }
        Ok(())
    }

    /// Physical rotation by `angle_rad` about the frame-adjusted axis.
    pub fn rotation(&mut self, q: Qubit, angle_rad: f64, nominal_axis_rad: f64) -> Result<()> {
        self.check(q)?;
        if angle_rad == 0.0 {
            return Ok(());
        }
        let axis = nominal_axis_rad - self.frames[q.index()];
        let rabi = self.device.rabi_hz(q)?;
        self.ops
            .push(NativeOp::Rotation(RotationGate::new(q, angle_rad, axis, rabi)));
        Ok(())
    }

    /// Virtual z rotation diag(1, e^{i angle}).
    pub fn rz(&mut self, q: Qubit, angle_rad: f64) -> Result<()> {
        self.check(q)?;
        self.frames[q.index()] += angle_rad;
        Ok(())
    }

    pub fn hadamard(&mut self, q: Qubit) -> Result<()> {
        self.rotation(q, -FRAC_PI_2, FRAC_PI_2)?;
        self.rz(q, PI)
    }

    pub fn cz(&mut self, a: Qubit, b: Qubit) -> Result<()> {
        self.cphase((a, b), PI)
    }

    /// Calibrated conditional phase diag(1, 1, 1, e^{i phase}) on an edge.
    pub fn cphase(&mut self, edge: (Qubit, Qubit), phase_rad: f64) -> Result<()> {
        if edge.0 == edge.1 {
            return Err(Error::DuplicateTarget(edge.0));
        }
        let gate = cphase_gate(edge, phase_rad, self.device, &self.pulses)?;
        self.ops.push(NativeOp::CPhase(gate));
        Ok(())
    }

    pub fn cnot(&mut self, control: Qubit, target: Qubit) -> Result<()> {
        self.rotation(target, -FRAC_PI_2, FRAC_PI_2)?;
        self.cz(control, target)?;
        self.rotation(target, FRAC_PI_2, FRAC_PI_2)
    }

    pub fn toffoli(&mut self, controls: (Qubit, Qubit), target: Qubit) -> Result<()> {
        let template = toffoli_like(controls, target, self.device, &self.pulses)?;
        for op in template.ops() {
            match op {
                NativeOp::Rotation(g) => {
                    self.rotation(g.qubit, g.rotation_angle_rad, g.axis_angle_rad)?
                }
                NativeOp::CPhase(g) => self.ops.push(NativeOp::CPhase(*g)),
                _ => unreachable!("toffoli template contains only rotations and phases"),
            }
        }
        Ok(())
    }

    pub fn swap(&mut self, edge: (Qubit, Qubit), swap_angle_rad: f64) -> Result<()> {
        let gate = calibrate_swap(edge, swap_angle_rad, self.device, &self.pulses)?;
        self.ops.push(NativeOp::Swap(gate));
        Ok(())
    }

    pub fn idle(&mut self, qubits: Vec<Qubit>, duration_s: f64) -> Result<()> {
        for &q in &qubits {
            self.check(q)?;
        }
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(Error::InvalidDuration(duration_s));
        }
        self.ops.push(NativeOp::Idle { qubits, duration_s });
        Ok(())
    }

    pub fn measure(&mut self, pair: (Qubit, Qubit), read: Qubit) -> Result<()> {
        self.device.require_readout_pair(pair)?;
        self.ops.push(NativeOp::PairMeasure(PairMeasure {
            pair,
            read,
            partner_value: None,
        }));
        Ok(())
    }

    pub fn logical_op(&mut self, op: &LogicalOp) -> Result<()> {
        match *op {
            LogicalOp::Hadamard { qubit } => self.hadamard(qubit),
            LogicalOp::RotateX { qubit, angle_rad } => self.rotation(qubit, angle_rad, 0.0),
            LogicalOp::RotateY { qubit, angle_rad } => self.rotation(qubit, angle_rad, FRAC_PI_2),
            LogicalOp::RotateZ { qubit, angle_rad } => self.rz(qubit, angle_rad),
            LogicalOp::ControlledZ { a, b } => self.cz(a, b),
            LogicalOp::ControlledNot { control, target } => self.cnot(control, target),
            LogicalOp::Toffoli { controls, target } => self.toffoli(controls, target),
            LogicalOp::Measure { pair, read } => self.measure(pair, read),
        }
    }

    /// Index of the next op; used to split circuits for mid-sequence error
    /// injection.
    pub fn mark(&self) -> usize {
        self.ops.len()
    }

    pub fn finish(self) -> Result<NativeCircuit> {
        NativeCircuit::new(self.frames.len(), self.ops, self.frames)
    }
}

/// Lowers a logical circuit onto the device's native gate set.
pub fn lower(
    circuit: &LogicalCircuit,
    device: &DeviceModel,
    pulses: &PulseSettings,
) -> Result<NativeCircuit> {
    if circuit.n_qubits() != device.n_qubits() {
        return Err(Error::DimensionMismatch {
            dim: circuit.n_qubits(),
            n_targets: device.n_qubits(),
        });
    }
    let mut lowering = Lowering::new(device, *pulses);
    for op in circuit.ops() {
        lowering.logical_op(op)?;
    }
    lowering.finish()
}

/// Reference unitary of a logical circuit, built from textbook matrices.
pub fn logical_unitary(circuit: &LogicalCircuit) -> Result<Unitary> {
    if circuit.n_qubits() > 6 {
        return Err(Error::BadDimension(1 << circuit.n_qubits()));
    }
    let dim = 1usize << circuit.n_qubits();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let cx = |re: f64, im: f64| Complex64::new(re, im);
    let hadamard = Unitary::new(2, vec![cx(r, 0.0), cx(r, 0.0), cx(r, 0.0), cx(-r, 0.0)]).unwrap();
    let rot = |theta: f64, phi: f64| {
        let half = theta / 2.0;
        Unitary::new(
            2,
            vec![
                cx(half.cos(), 0.0),
                cx(0.0, -half.sin()) * Complex64::from_polar(1.0, -phi),
                cx(0.0, -half.sin()) * Complex64::from_polar(1.0, phi),
                cx(half.cos(), 0.0),
            ],
        )
        .unwrap()
    };
    let mut cz4 = vec![Complex64::ZERO; 16];
    for i in 0..4 {
        cz4[i * 4 + i] = if i == 3 { -Complex64::ONE } else { Complex64::ONE };
    }
    let cz4 = Unitary::new(4, cz4).unwrap();
    let mut cnot4 = vec![Complex64::ZERO; 16];
    for (row, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        cnot4[row * 4 + col] = Complex64::ONE;
    }
    let cnot4 = Unitary::new(4, cnot4).unwrap();
    let mut ccx = vec![Complex64::ZERO; 64];
    for col in 0..8 {
        let row = if col >= 6 { col ^ 1 } else { col };
        ccx[row * 8 + col] = Complex64::ONE;
    }
    let ccx = Unitary::new(8, ccx).unwrap();

    let mut entries = vec![Complex64::ZERO; dim * dim];
    let mut s = StateVector::new(circuit.n_qubits())?;
    for col in 0..dim {
        s.set_basis_state(col)?;
        for op in circuit.ops() {
            match *op {
                LogicalOp::Hadamard { qubit } => s.apply(&hadamard, &[qubit])?,
                LogicalOp::RotateX { qubit, angle_rad } => {
                    s.apply(&rot(angle_rad, 0.0), &[qubit])?
                }
                LogicalOp::RotateY { qubit, angle_rad } => {
                    s.apply(&rot(angle_rad, FRAC_PI_2), &[qubit])?
                }
                LogicalOp::RotateZ { qubit, angle_rad } => s.apply_up_phase(qubit, angle_rad)?,
                LogicalOp::ControlledZ { a, b } => s.apply(&cz4, &[a, b])?,
                LogicalOp::ControlledNot { control, target } => {
                    s.apply(&cnot4, &[control, target])?
                }
                LogicalOp::Toffoli { controls, target } => {
                    s.apply(&ccx, &[controls.0, controls.1, target])?
                }
                LogicalOp::Measure { .. } => return Err(Error::NonUnitaryCircuit),
            }
        }
        for row in 0..dim {
            entries[row * dim + col] = s.amplitudes()[row];
        }
    }
    Unitary::new(dim, entries)
}

#[derive(Clone, Copy, Debug)]
pub enum EquivalenceMode {
    /// Unitaries must agree after removing one overall phase.
    UpToGlobalPhase,
    /// The native unitary may differ by a diagonal of unit phases that does
    /// not depend on the target qubit's bit.
    UpToControlDiagonal { target: Qubit },
}

#[derive(Clone, Copy, Debug)]
pub struct Equivalence {
    pub equivalent: bool,
    pub deviation: f64,
}

/// Compares a lowered circuit against a logical reference.
pub fn verify_equivalence(
    native: &NativeCircuit,
    logical: &LogicalCircuit,
    mode: EquivalenceMode,
    tol: f64,
) -> Result<Equivalence> {
    let u_native = native.unitary()?;
    let u_logical = logical_unitary(logical)?;
    if u_native.dim() != u_logical.dim() {
        return Err(Error::DimensionMismatch {
            dim: u_native.dim(),
            n_targets: u_logical.n_qubits(),
        });
    }
    let deviation = match mode {
        EquivalenceMode::UpToGlobalPhase => u_native.distance_up_to_phase(&u_logical),
        EquivalenceMode::UpToControlDiagonal { target } => {
            if target.index() >= native.n_qubits() {
                return Err(Error::IndexOutOfRange {
                    qubit: target,
                    n_qubits: native.n_qubits(),
                });
            }
            let w = u_native.mul(&u_logical.dagger())?;
            control_diagonal_deviation(&w, target)
        }
    };
    Ok(Equivalence {
        equivalent: deviation <= tol,
        deviation,
    })
}

fn control_diagonal_deviation(w: &Unitary, target: Qubit) -> f64 {
    let dim = w.dim();
    let tbit = 1usize << target.index();
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                dev = dev.max(w.get(i, j).norm());
            }
        }
        dev = dev.max((w.get(i, i).norm() - 1.0).abs());
        dev = dev.max((w.get(i, i) - w.get(i ^ tbit, i ^ tbit)).norm());
    }
    dev
}

fn propagate_values(values: &mut [Option<BasisValue>], op: &NativeOp) {
    match op {
        NativeOp::Rotation(g) => {
            let r = wrap_phase(g.rotation_angle_rad);
            let v = &mut values[g.qubit.index()];
            if r.abs() < ANGLE_TOL {
            } else if (r.abs() - PI).abs() < ANGLE_TOL {
                *v = v.map(BasisValue::flipped);
            } else {
                *v = None;
            }
        }
        NativeOp::CPhase(_) | NativeOp::Idle { .. } => {}
        NativeOp::Swap(g) => {
            let r = wrap_phase(g.swap_angle_rad);
            let (a, b) = (g.edge.0.index(), g.edge.1.index());
            if r.abs() < ANGLE_TOL {
            } else if (r.abs() - PI).abs() < ANGLE_TOL {
                values.swap(a, b);
            } else if values[a].is_some() && values[a] == values[b] {
            } else {
                values[a] = None;
                values[b] = None;
            }
        }
        NativeOp::PairMeasure(_) => {}
    }
}

/// Appends parity readouts of `targets` to a measurement-free circuit.
///
/// Tracks which qubits still hold classically known basis values. A readout
/// needs its partner's value: if it is unknown, a full swap with an adjacent
/// qubit of known value is inserted to reset the partner; with no such
/// neighbour the readout is rejected.
pub fn insert_readout_reset(
    circuit: NativeCircuit,
    device: &DeviceModel,
    pulses: &PulseSettings,
    targets: &[Qubit],
) -> Result<NativeCircuit> {
    if circuit.measurements().next().is_some() {
        return Err(Error::NonUnitaryCircuit);
    }
    let (n, mut ops, frames) = circuit.into_parts();
    if n != device.n_qubits() {
        return Err(Error::DimensionMismatch {
            dim: n,
            n_targets: device.n_qubits(),
        });
    }
    let mut values: Vec<Option<BasisValue>> = vec![Some(BasisValue::Down); n];
    for op in &ops {
        propagate_values(&mut values, op);
    }
    let mut pairs = Vec::new();
    let mut reserved = vec![false; n];
    for &q in targets {
        let pair = device.readout_pair_of(q)?;
        for x in [pair.0, pair.1] {
            if reserved[x.index()] {
                return Err(Error::DuplicateTarget(x));
            }
            reserved[x.index()] = true;
        }
        pairs.push((q, pair));
    }
    let mut measures = Vec::new();
    for (q, pair) in pairs {
        let partner = if pair.0 == q { pair.1 } else { pair.0 };
        if values[partner.index()].is_none() {
            let find = |want_down: bool| {
                device.qubits().find(|&h| {
                    h != partner
                        && !reserved[h.index()]
                        && device.has_edge((partner, h))
                        && match values[h.index()] {
                            Some(BasisValue::Down) => true,
                            Some(BasisValue::Up) => !want_down,
                            None => false,
                        }
                })
            };
            let helper = find(true).or_else(|| find(false)).ok_or(Error::ReadoutConstraint {
                read: q,
                partner,
            })?;
            let gate = calibrate_swap((partner, helper), PI, device, pulses)?;
            let op = NativeOp::Swap(gate);
            propagate_values(&mut values, &op);
            ops.push(op);
        }
        measures.push(PairMeasure {
            pair,
            read: q,
            partner_value: values[partner.index()],
        });
    }
    for m in measures {
        ops.push(NativeOp::PairMeasure(m));
    }
    NativeCircuit::new(n, ops, frames)
}
