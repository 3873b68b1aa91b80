use super::{
    find_record, reported_up, require_sweep, sweep_single_readout, Curve, Estimator, SweepSetup,
};
use crate::analysis::{fit_decay, DecayModel, FitResult};
use crate::circuit::{LogicalCircuit, LogicalOp, NativeCircuit};
use crate::compiler::{insert_readout_reset, logical_unitary, Lowering};
use crate::error::{Error, Result};
use crate::exec::{map_shots, shot_rng, Engine, ExecModel};
use crate::gates::wrap_phase;
use crate::noise::{ErrorInjection, InjectionMode};
use crate::qubit::{Qubit, Q1, Q3, Q4};
use crate::state::{Parity, StateVector};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Data qubit of both codes.
pub const DATA_QUBIT: Qubit = Q4;
/// Ancilla pair of the three-qubit code, also the legal two-qubit ancillas.
pub const ANCILLA_QUBITS: (Qubit, Qubit) = (Q1, Q3);

/// Initial data-qubit state: spin down, or the equator state reached by a
/// quarter x pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeInput {
    Down,
    Plus,
}

/// Optional mid-wait refocusing pulse in the two-qubit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoQubitEcho {
    None,
    AncillaY2,
}

#[derive(Clone, Copy, Debug)]
pub struct TwoQubitOptions {
    pub ancilla: Qubit,
    pub input: CodeInput,
    pub echo: TwoQubitEcho,
    /// Fit a decay constant to the curve: Gaussian without echo, exponential
    /// with it.
    pub fit_tau: bool,
}

#[derive(Clone, Debug)]
pub struct TwoQubitOutcome {
    pub curve: Curve,
    pub fit: Option<FitResult>,
}

/// One sweep of the three-qubit code with a deterministic phase error on a
/// subset of the code qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetSweep {
    pub label: String,
    pub targets: Vec<Qubit>,
    pub curve: Curve,
}

/// One shot of the random-error run: which code qubits were flipped (data,
/// then the two ancillas), the parity the readout reported, and whether the
/// shot counted as a success.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeShot {
    pub flips: [bool; 3],
    pub reported_parity: Parity,
    pub success: bool,
}

/// Success curve over the flip-probability grid plus the full per-shot log.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeResult {
    pub curve: Curve,
    pub shots: Vec<Vec<CodeShot>>,
}

fn check_ancilla(device: &crate::device::DeviceModel, ancilla: Qubit) -> Result<()> {
    if ancilla != ANCILLA_QUBITS.0 && ancilla != ANCILLA_QUBITS.1 {
        return Err(Error::Estimator(format!(
            "ancilla must be {} or {}, got {ancilla}",
            ANCILLA_QUBITS.0, ANCILLA_QUBITS.1
        )));
    }
    device.require_edge((DATA_QUBIT, ancilla))
}

/// Ideal final state of a measurement-free logical circuit on the array.
fn ideal_state(ops: &[LogicalOp]) -> Result<StateVector> {
    let circuit = LogicalCircuit::new(4, ops.to_vec())?;
    let u = logical_unitary(&circuit)?;
    let mut state = StateVector::new(4)?;
    state.apply(&u, &[Qubit(3), Qubit(2), Qubit(1), Qubit(0)])?;
    Ok(state)
}

/// Pure single-qubit state of `q`, assuming it is disentangled from the rest.
fn single_qubit_state(state: &StateVector, q: Qubit) -> Result<(Complex64, Complex64)> {
    let amps = state.amplitudes();
    let bit = 1usize << q.index();
    let mut best = (0usize, -1.0f64);
    for idx in 0..amps.len() {
        if idx & bit == 0 {
            let w = amps[idx].norm_sqr() + amps[idx | bit].norm_sqr();
            if w > best.1 {
                best = (idx, w);
            }
        }
    }
    if (best.1 - 1.0).abs() > 1e-9 {
        return Err(Error::Estimator(format!(
            "{q} is entangled before projection"
        )));
    }
    Ok((amps[best.0], amps[best.0 | bit]))
}

/// Rotation (angle, axis) that maps the state (a, b) onto spin down, up to
/// phase; None when it already points down.
fn projection_angles(a: Complex64, b: Complex64) -> Option<(f64, f64)> {
    if b.norm() < 1e-9 {
        return None;
    }
    if a.norm() < 1e-9 {
        return Some((PI, 0.0));
    }
    let theta = 2.0 * b.norm().atan2(a.norm());
    let phi = wrap_phase(b.arg() - a.arg() - FRAC_PI_2);
    Some((theta, phi))
}

/// The readout-projection pulse: the inverse of the preparation of the ideal
/// noiseless final data state.
fn projection_pulse(pre_measure: &[LogicalOp]) -> Result<Option<(f64, f64)>> {
    let state = ideal_state(pre_measure)?;
    let (a, b) = single_qubit_state(&state, DATA_QUBIT)?;
    Ok(projection_angles(a, b))
}

fn prep_ops(input: CodeInput) -> Vec<LogicalOp> {
    match input {
        CodeInput::Down => vec![],
        CodeInput::Plus => vec![LogicalOp::RotateX {
            qubit: DATA_QUBIT,
            angle_rad: FRAC_PI_2,
        }],
    }
}

fn two_qubit_logical(opts: &TwoQubitOptions) -> Vec<LogicalOp> {
    let (d, a) = (DATA_QUBIT, opts.ancilla);
    let mut ops = prep_ops(opts.input);
    ops.push(LogicalOp::RotateY {
        qubit: a,
        angle_rad: -FRAC_PI_2,
    });
    ops.push(LogicalOp::ControlledZ { a: d, b: a });
    ops.push(LogicalOp::RotateY {
        qubit: d,
        angle_rad: -FRAC_PI_2,
    });
    if opts.echo == TwoQubitEcho::AncillaY2 {
        ops.push(LogicalOp::RotateY {
            qubit: a,
            angle_rad: PI,
        });
    }
    ops.push(LogicalOp::RotateY {
        qubit: d,
        angle_rad: FRAC_PI_2,
    });
    ops.push(LogicalOp::ControlledZ { a: d, b: a });
    ops.push(LogicalOp::RotateY {
        qubit: a,
        angle_rad: FRAC_PI_2,
    });
    ops.push(LogicalOp::ControlledNot {
        control: a,
        target: d,
    });
    ops
}

/// Native two-qubit-code circuit for one wait time. Returns the circuit and
/// the op index just before decoding, where mid-wait errors act.
fn two_qubit_circuit(
    model: &ExecModel,
    opts: &TwoQubitOptions,
    t_wait_s: f64,
    projection: Option<(f64, f64)>,
) -> Result<(NativeCircuit, usize)> {
    let (d, a) = (DATA_QUBIT, opts.ancilla);
    let device = &model.device;
    let mut low = Lowering::new(device, model.pulses);
    if opts.input == CodeInput::Plus {
        low.rotation(d, FRAC_PI_2, 0.0)?;
    }
    low.rotation(a, -FRAC_PI_2, FRAC_PI_2)?;
    low.cz(d, a)?;
    low.rotation(d, -FRAC_PI_2, FRAC_PI_2)?;
    if t_wait_s > 0.0 {
        low.idle(vec![d, a], t_wait_s / 2.0)?;
    }
    if opts.echo == TwoQubitEcho::AncillaY2 {
        low.rotation(a, PI, FRAC_PI_2)?;
    }
    if t_wait_s > 0.0 {
        low.idle(vec![d, a], t_wait_s / 2.0)?;
    }
    let mark = low.mark();
    low.rotation(d, FRAC_PI_2, FRAC_PI_2)?;
    low.cz(d, a)?;
    low.rotation(a, FRAC_PI_2, FRAC_PI_2)?;
    low.cnot(a, d)?;
    if let Some((theta, phi)) = projection {
        low.rotation(d, theta, phi)?;
    }
    let circuit = insert_readout_reset(low.finish()?, device, &model.pulses, &[d])?;
    Ok((circuit, mark))
}

/// Two-qubit phase-flip code over a wait-time sweep: encode, wait with an
/// optional ancilla echo, decode, correct, project the data qubit to spin
/// down and read it out. y is the fraction of shots reporting the ideal
/// (down) outcome.
pub fn run_two_qubit_code(
    setup: &SweepSetup,
    opts: &TwoQubitOptions,
    waits_s: &[f64],
) -> Result<TwoQubitOutcome> {
    check_ancilla(&setup.model.device, opts.ancilla)?;
    for &t in waits_s {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidDuration(t));
        }
    }
    let projection = projection_pulse(&two_qubit_logical(opts))?;
    let curve = sweep_single_readout(setup, waits_s, DATA_QUBIT, false, 0, |t| {
        two_qubit_circuit(setup.model, opts, t, projection).map(|(c, _)| (c, None))
    })?;
    let fit = if opts.fit_tau {
        let model = match opts.echo {
            TwoQubitEcho::None => DecayModel::Gaussian,
            TwoQubitEcho::AncillaY2 => DecayModel::Exponential,
        };
        Some(fit_decay(&curve, model)?)
    } else {
        None
    };
    Ok(TwoQubitOutcome { curve, fit })
}

fn three_qubit_logical(input: CodeInput) -> Vec<LogicalOp> {
    let d = DATA_QUBIT;
    let (a1, a2) = ANCILLA_QUBITS;
    let mut ops = prep_ops(input);
    for a in [a1, a2] {
        ops.push(LogicalOp::RotateY {
            qubit: a,
            angle_rad: -FRAC_PI_2,
        });
    }
    for a in [a1, a2] {
        ops.push(LogicalOp::ControlledZ { a: d, b: a });
    }
    ops.push(LogicalOp::RotateY {
        qubit: d,
        angle_rad: -FRAC_PI_2,
    });
    for q in [d, a1, a2] {
        ops.push(LogicalOp::RotateY {
            qubit: q,
            angle_rad: PI,
        });
    }
    ops.push(LogicalOp::RotateY {
        qubit: d,
        angle_rad: FRAC_PI_2,
    });
    for a in [a1, a2] {
        ops.push(LogicalOp::ControlledZ { a: d, b: a });
    }
    for a in [a1, a2] {
        ops.push(LogicalOp::RotateY {
            qubit: a,
            angle_rad: FRAC_PI_2,
        });
    }
    ops.push(LogicalOp::Toffoli {
        controls: (a1, a2),
        target: d,
    });
    ops
}

/// Native three-qubit-code circuit: encode, refocus all three, decode,
/// doubly-controlled correction, projection, ancilla reset and pair readout.
/// Returns the circuit and the op index where errors are injected (after the
/// refocusing pulses, before decoding).
fn three_qubit_circuit(
    model: &ExecModel,
    input: CodeInput,
    projection: Option<(f64, f64)>,
) -> Result<(NativeCircuit, usize)> {
    let d = DATA_QUBIT;
    let (a1, a2) = ANCILLA_QUBITS;
    let device = &model.device;
    let mut low = Lowering::new(device, model.pulses);
    if input == CodeInput::Plus {
        low.rotation(d, FRAC_PI_2, 0.0)?;
    }
    for a in [a1, a2] {
        low.rotation(a, -FRAC_PI_2, FRAC_PI_2)?;
    }
    for a in [a1, a2] {
        low.cz(d, a)?;
    }
    low.rotation(d, -FRAC_PI_2, FRAC_PI_2)?;
    for q in [d, a1, a2] {
        low.rotation(q, PI, FRAC_PI_2)?;
    }
    let mark = low.mark();
    low.rotation(d, FRAC_PI_2, FRAC_PI_2)?;
    for a in [a1, a2] {
        low.cz(d, a)?;
    }
    for a in [a1, a2] {
        low.rotation(a, FRAC_PI_2, FRAC_PI_2)?;
    }
    low.toffoli((a1, a2), d)?;
    if let Some((theta, phi)) = projection {
        low.rotation(d, theta, phi)?;
    }
    let circuit = insert_readout_reset(low.finish()?, device, &model.pulses, &[d])?;
    Ok((circuit, mark))
}

fn check_subset(subset: &[Qubit]) -> Result<()> {
    let code = [DATA_QUBIT, ANCILLA_QUBITS.0, ANCILLA_QUBITS.1];
    for (i, &q) in subset.iter().enumerate() {
        if !code.contains(&q) {
            return Err(Error::Estimator(format!("{q} is not a code qubit")));
        }
        if subset[..i].contains(&q) {
            return Err(Error::DuplicateTarget(q));
        }
    }
    Ok(())
}

fn subset_label(subset: &[Qubit]) -> String {
    if subset.is_empty() {
        "none".to_string()
    } else if subset.len() == 3 {
        "all".to_string()
    } else {
        subset
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join("&")
    }
}

/// Three-qubit code under a deterministic phase error Z(phi) on each listed
/// subset of code qubits, swept over phi.
pub fn run_three_qubit_phase_sweep(
    setup: &SweepSetup,
    input: CodeInput,
    subsets: &[Vec<Qubit>],
    phases_rad: &[f64],
) -> Result<Vec<SubsetSweep>> {
    if subsets.is_empty() {
        return Err(Error::Estimator("no error subsets given".into()));
    }
    for s in subsets {
        check_subset(s)?;
    }
    let projection = projection_pulse(&three_qubit_logical(input))?;
    let mut out = Vec::with_capacity(subsets.len());
    for (s_idx, subset) in subsets.iter().enumerate() {
        let offset = (s_idx * phases_rad.len()) as u64;
        let curve = sweep_single_readout(setup, phases_rad, DATA_QUBIT, false, offset, |phi| {
            let (circuit, mark) = three_qubit_circuit(setup.model, input, projection)?;
            let injection = if subset.is_empty() {
                None
            } else {
                Some((
                    mark,
                    ErrorInjection {
                        targets: subset.clone(),
                        mode: InjectionMode::PhaseAll { phi_rad: phi },
                    },
                ))
            };
            Ok((circuit, injection))
        })?;
        out.push(SubsetSweep {
            label: subset_label(subset),
            targets: subset.clone(),
            curve,
        });
    }
    Ok(out)
}

/// Three-qubit code with independent Z(pi) errors injected on each code
/// qubit with probability p, swept over p. Sampling only; every shot is
/// logged.
pub fn run_three_qubit_code_random(
    setup: &SweepSetup,
    input: CodeInput,
    p_grid: &[f64],
) -> Result<CodeResult> {
    setup.validate()?;
    require_sweep(p_grid)?;
    if setup.estimator != Estimator::Sampled {
        return Err(Error::Estimator(
            "random error injection requires sampling".into(),
        ));
    }
    for &p in p_grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain {
                name: "p",
                value: p,
                domain: "[0, 1]",
            });
        }
    }
    let targets = vec![DATA_QUBIT, ANCILLA_QUBITS.0, ANCILLA_QUBITS.1];
    let projection = projection_pulse(&three_qubit_logical(input))?;
    let (circuit, mark) = three_qubit_circuit(setup.model, input, projection)?;
    let mut counts = Vec::with_capacity(p_grid.len());
    let mut logs = Vec::with_capacity(p_grid.len());
    for (i, &p) in p_grid.iter().enumerate() {
        let injection = ErrorInjection {
            targets: targets.clone(),
            mode: InjectionMode::Bernoulli { p },
        };
        let shots = map_shots(setup.shots_per_point as usize, |s| {
            let rng = shot_rng(setup.master_seed, setup.experiment_id, i as u64, s as u64);
            let mut engine = Engine::new(setup.model, rng)?;
            engine.run_ops(&circuit.ops()[..mark])?;
            let mask = engine.inject_mask(&injection)?;
            engine.run_ops(&circuit.ops()[mark..])?;
            engine.apply_frames(circuit.frames())?;
            let records = engine.into_records();
            let record = find_record(&records, DATA_QUBIT)?;
            let up = reported_up(record)?;
            Ok(CodeShot {
                flips: [mask[0], mask[1], mask[2]],
                reported_parity: record.reported_parity,
                success: !up,
            })
        })?;
        counts.push(shots.iter().filter(|s| s.success).count() as u64);
        logs.push(shots);
    }
    let curve = Curve::from_counts(p_grid.to_vec(), &counts, setup.shots_per_point)?;
    Ok(CodeResult { curve, shots: logs })
}
