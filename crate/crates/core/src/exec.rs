use crate::circuit::{NativeCircuit, NativeOp};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::gates::{resonant_swap_unitary, PulseSettings};
use crate::noise::{
    idle_flip_probability, readout_with_error, reported_even_prob, sample_offsets, ErrorInjection,
    InjectionMode, NoiseParams, ReadoutModel, ResetModel,
};
use crate::qubit::Qubit;
use crate::state::{Parity, StateVector, Unitary};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

/// Everything needed to execute native circuits: the device, optional
/// dephasing noise, readout and reset imperfections, and pulse settings.
#[derive(Clone, Debug)]
pub struct ExecModel {
    pub device: DeviceModel,
    pub noise: Option<NoiseParams>,
    pub readout: ReadoutModel,
    pub reset: ResetModel,
    pub residual_exchange_hz: f64,
    pub pulses: PulseSettings,
}

impl ExecModel {
    /// Noiseless execution with perfect readout and reset.
    pub fn ideal() -> Self {
        ExecModel {
            device: DeviceModel::default(),
            noise: None,
            readout: ReadoutModel::ideal(),
            reset: ResetModel::ideal(),
            residual_exchange_hz: 0.0,
            pulses: PulseSettings::default(),
        }
    }

    /// Default dephasing, readout and reset imperfections.
    pub fn noisy_defaults() -> Self {
        ExecModel {
            device: DeviceModel::default(),
            noise: Some(NoiseParams::device_defaults()),
            readout: ReadoutModel::default(),
            reset: ResetModel::default(),
            residual_exchange_hz: 0.0,
            pulses: PulseSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(noise) = &self.noise {
            if noise.n_qubits() != self.device.n_qubits() {
                return Err(Error::DimensionMismatch {
                    dim: noise.n_qubits(),
                    n_targets: self.device.n_qubits(),
                });
            }
        }
        self.reset.validate()?;
        if !self.residual_exchange_hz.is_finite() || self.residual_exchange_hz < 0.0 {
            return Err(Error::Domain {
                name: "residual_exchange_hz",
                value: self.residual_exchange_hz,
                domain: "[0, inf)",
            });
        }
        Ok(())
    }
}

/// One measurement outcome: the reported parity plus, when the partner's
/// value was declared, the inferred state of the read qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasureRecord {
    pub read: Qubit,
    pub pair: (Qubit, Qubit),
    pub true_parity: Parity,
    pub reported_parity: Parity,
    pub reported_up: Option<bool>,
}

/// Stochastic executor for one shot. Random draws follow a fixed schedule so
/// that runs with the same seed stay aligned regardless of parameter values:
/// quasi-static offsets at construction, one uniform per idling qubit, one
/// per swap, two per measurement, one per stochastic injection target.
pub struct Engine<'a, R: Rng> {
    model: &'a ExecModel,
    rng: R,
    state: StateVector,
    offsets: Vec<f64>,
    records: Vec<MeasureRecord>,
}

impl<'a, R: Rng> Engine<'a, R> {
    pub fn new(model: &'a ExecModel, mut rng: R) -> Result<Self> {
        model.validate()?;
        let n = model.device.n_qubits();
        let offsets = match &model.noise {
            Some(noise) => sample_offsets(noise, &mut rng),
            None => vec![0.0; n],
        };
        Ok(Engine {
            model,
            rng,
            state: StateVector::new(n)?,
            offsets,
            records: Vec::new(),
        })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn records(&self) -> &[MeasureRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<MeasureRecord> {
        self.records
    }

    pub fn up_probability(&self, q: Qubit) -> Result<f64> {
        self.state.qubit_up_probability(q)
    }

    pub fn even_probability(&self, pair: (Qubit, Qubit)) -> Result<f64> {
        self.state.pair_even_probability(pair)
    }

    pub fn run_op(&mut self, op: &NativeOp) -> Result<()> {
        match op {
            NativeOp::Rotation(g) => self.state.apply(&g.unitary(), &[g.qubit]),
            NativeOp::CPhase(g) => self.state.apply(&g.unitary(), &[g.edge.0, g.edge.1]),
            NativeOp::Swap(g) => {
                let u: f64 = self.rng.random();
                if u >= self.model.reset.retain_probability {
                    let unitary = resonant_swap_unitary(g, &self.model.device)?;
                    self.state.apply(&unitary, &[g.edge.0, g.edge.1])?;
                }
                Ok(())
            }
            NativeOp::Idle { qubits, duration_s } => self.idle(qubits, *duration_s),
            NativeOp::PairMeasure(m) => {
                self.model.device.require_readout_pair(m.pair)?;
                let fidelity = self.model.readout.for_pair(m.pair);
                let true_parity = self.state.measure_pair(m.pair, &mut self.rng)?;
                let reported_parity = readout_with_error(&mut self.rng, true_parity, fidelity);
                let reported_up = m.partner_value.map(|pv| {
                    match reported_parity {
                        Parity::Even => pv,
                        Parity::Odd => pv.flipped(),
                    }
                    .is_up()
                });
                self.records.push(MeasureRecord {
                    read: m.read,
                    pair: m.pair,
                    true_parity,
                    reported_parity,
                    reported_up,
                });
                Ok(())
            }
        }
    }

    fn idle(&mut self, qubits: &[Qubit], duration_s: f64) -> Result<()> {
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(Error::InvalidDuration(duration_s));
        }
        if let Some(noise) = &self.model.noise {
            for &q in qubits {
                let qn = noise.qubit(q)?;
                self.state
                    .apply_up_phase(q, self.offsets[q.index()] * duration_s)?;
                let u: f64 = self.rng.random();
                if u < idle_flip_probability(qn.gamma_markov_hz, duration_s) {
                    self.state.apply_up_phase(q, PI)?;
                }
            }
        }
        if self.model.residual_exchange_hz > 0.0 {
            let phi = TAU * self.model.residual_exchange_hz * duration_s;
            for &(a, b) in self.model.device.edges() {
                if qubits.contains(&a) && qubits.contains(&b) {
                    let mut e = vec![Complex64::ZERO; 16];
                    e[0] = Complex64::ONE;
                    e[5] = Complex64::ONE;
                    e[10] = Complex64::ONE;
                    e[15] = Complex64::from_polar(1.0, phi);
                    self.state.apply(&Unitary::new(4, e)?, &[a, b])?;
                }
            }
        }
        Ok(())
    }

    pub fn run_ops(&mut self, ops: &[NativeOp]) -> Result<()> {
        for op in ops {
            self.run_op(op)?;
        }
        Ok(())
    }

    pub fn inject(&mut self, injection: &ErrorInjection) -> Result<()> {
        self.inject_mask(injection).map(|_| ())
    }

    /// Injects errors and reports, per target, whether a phase was applied.
    pub fn inject_mask(&mut self, injection: &ErrorInjection) -> Result<Vec<bool>> {
        injection.validate()?;
        let mut mask = Vec::with_capacity(injection.targets.len());
        match injection.mode {
            InjectionMode::PhaseAll { phi_rad } => {
                for &q in &injection.targets {
                    self.state.apply_up_phase(q, phi_rad)?;
                    mask.push(phi_rad != 0.0);
                }
            }
            InjectionMode::Bernoulli { p } => {
                for &q in &injection.targets {
                    let u: f64 = self.rng.random();
                    let hit = u < p;
                    if hit {
                        self.state.apply_up_phase(q, PI)?;
                    }
                    mask.push(hit);
                }
            }
        }
        Ok(mask)
    }

    pub fn apply_frames(&mut self, frames: &[f64]) -> Result<()> {
        for (i, &f) in frames.iter().enumerate() {
            self.state.apply_up_phase(Qubit(i as u8), f)?;
        }
        Ok(())
    }

    pub fn run_circuit(&mut self, circuit: &NativeCircuit) -> Result<()> {
        self.run_ops(circuit.ops())?;
        self.apply_frames(circuit.frames())
    }
}

/// Executes one shot, optionally injecting errors before op index `k`, and
/// returns the measurement records.
pub fn run_shot<R: Rng>(
    model: &ExecModel,
    circuit: &NativeCircuit,
    injection: Option<(usize, &ErrorInjection)>,
    rng: R,
) -> Result<Vec<MeasureRecord>> {
    let mut engine = Engine::new(model, rng)?;
    match injection {
        Some((k, inj)) => {
            if k > circuit.ops().len() {
                return Err(Error::Injection(k));
            }
            engine.run_ops(&circuit.ops()[..k])?;
            engine.inject(inj)?;
            engine.run_ops(&circuit.ops()[k..])?;
        }
        None => engine.run_ops(circuit.ops())?,
    }
    engine.apply_frames(circuit.frames())?;
    Ok(engine.into_records())
}

/// One measurement's exact reported-even probability and, when the partner's
/// value was declared, the probability of inferring the read qubit as up.
#[derive(Clone, Copy, Debug)]
pub struct ExactOutcome {
    pub read: Qubit,
    pub pair: (Qubit, Qubit),
    pub reported_even_prob: f64,
    pub reported_up_prob: Option<f64>,
}

/// Deterministic estimator: evolves the state vector without sampling and
/// reports exact measurement probabilities. Refuses models whose stochastic
/// elements would matter (idle dephasing, imperfect reset on a swap,
/// stochastic injection).
pub fn run_exact(
    model: &ExecModel,
    circuit: &NativeCircuit,
    injection: Option<(usize, &ErrorInjection)>,
) -> Result<Vec<ExactOutcome>> {
    model.validate()?;
    for op in circuit.ops() {
        match op {
            NativeOp::Idle { qubits, duration_s } if *duration_s > 0.0 => {
                if let Some(noise) = &model.noise {
                    for &q in qubits {
                        let qn = noise.qubit(q)?;
                        if qn.sigma_qs_rad_per_s > 0.0 || qn.gamma_markov_hz > 0.0 {
                            return Err(Error::Estimator(
                                "idle dephasing noise requires sampling".into(),
                            ));
                        }
                    }
                }
            }
            NativeOp::Swap(_) if model.reset.retain_probability > 0.0 => {
                return Err(Error::Estimator("imperfect reset requires sampling".into()));
            }
            _ => {}
        }
    }
    if let Some((k, inj)) = injection {
        inj.validate()?;
        if k > circuit.ops().len() {
            return Err(Error::Injection(k));
        }
        if matches!(inj.mode, InjectionMode::Bernoulli { .. }) {
            return Err(Error::Estimator(
                "stochastic error injection requires sampling".into(),
            ));
        }
    }
    let mut state = StateVector::new(circuit.n_qubits())?;
    let inject_at = |state: &mut StateVector, i: usize| -> Result<()> {
        if let Some((k, inj)) = injection {
            if k == i {
                if let InjectionMode::PhaseAll { phi_rad } = inj.mode {
                    for &q in &inj.targets {
                        state.apply_up_phase(q, phi_rad)?;
                    }
                }
            }
        }
        Ok(())
    };
    for (i, op) in circuit.ops().iter().enumerate() {
        inject_at(&mut state, i)?;
        match op {
            NativeOp::Rotation(g) => state.apply(&g.unitary(), &[g.qubit])?,
            NativeOp::CPhase(g) => state.apply(&g.unitary(), &[g.edge.0, g.edge.1])?,
            NativeOp::Swap(g) => {
                let unitary = resonant_swap_unitary(g, &model.device)?;
                state.apply(&unitary, &[g.edge.0, g.edge.1])?;
            }
            NativeOp::Idle { qubits, duration_s } => {
                if model.residual_exchange_hz > 0.0 {
                    let phi = TAU * model.residual_exchange_hz * duration_s;
                    for &(a, b) in model.device.edges() {
                        if qubits.contains(&a) && qubits.contains(&b) {
                            let mut e = vec![Complex64::ZERO; 16];
                            e[0] = Complex64::ONE;
                            e[5] = Complex64::ONE;
                            e[10] = Complex64::ONE;
                            e[15] = Complex64::from_polar(1.0, phi);
                            state.apply(&Unitary::new(4, e)?, &[a, b])?;
                        }
                    }
                }
            }
            NativeOp::PairMeasure(_) => {}
        }
    }
    inject_at(&mut state, circuit.ops().len())?;
    for (i, &f) in circuit.frames().iter().enumerate() {
        state.apply_up_phase(Qubit(i as u8), f)?;
    }
    let mut out = Vec::new();
    for m in circuit.measurements() {
        model.device.require_readout_pair(m.pair)?;
        let fidelity = model.readout.for_pair(m.pair);
        let q_even = state.pair_even_probability(m.pair)?;
        let rep = reported_even_prob(q_even, fidelity);
        let up = m
            .partner_value
            .map(|pv| if pv.is_up() { rep } else { 1.0 - rep });
        out.push(ExactOutcome {
            read: m.read,
            pair: m.pair,
            reported_even_prob: rep,
            reported_up_prob: up,
        });
    }
    Ok(out)
}

/// 32-byte seed derived from the master seed and the experiment, point and
/// shot indices (little-endian u64 lanes).
pub fn shot_seed(master: u64, experiment: u64, point: u64, shot: u64) -> [u8; 32] {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&experiment.to_le_bytes());
    seed[16..24].copy_from_slice(&point.to_le_bytes());
    seed[24..32].copy_from_slice(&shot.to_le_bytes());
    seed
}

pub fn shot_rng(master: u64, experiment: u64, point: u64, shot: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(shot_seed(master, experiment, point, shot))
}

/// Runs `f` for each shot index and collects the results in shot order.
#[cfg(feature = "parallel")]
pub fn map_shots<T, F>(n_shots: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n_shots).into_par_iter().map(f).collect()
}

/// Runs `f` for each shot index and collects the results in shot order.
#[cfg(not(feature = "parallel"))]
pub fn map_shots<T, F>(n_shots: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_shots_seq(n_shots, f)
}

/// Sequential reference implementation of [`map_shots`].
pub fn map_shots_seq<T, F>(n_shots: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..n_shots).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{BasisValue, PairMeasure};
    use crate::gates::RotationGate;
    use crate::noise::{PairFidelity, QubitNoise};
    use crate::qubit::{Q1, Q2, Q3, Q4};
    use std::f64::consts::FRAC_PI_2;

    const RABI: f64 = crate::gates::DEFAULT_RABI_HZ;

    fn rot(q: Qubit, theta: f64, phi: f64) -> NativeOp {
        NativeOp::Rotation(RotationGate::new(q, theta, phi, RABI))
    }

    fn measure(pair: (Qubit, Qubit), read: Qubit, pv: Option<BasisValue>) -> NativeOp {
        NativeOp::PairMeasure(PairMeasure {
            pair,
            read,
            partner_value: pv,
        })
    }

    fn circuit(ops: Vec<NativeOp>) -> NativeCircuit {
        NativeCircuit::new(4, ops, vec![0.0; 4]).unwrap()
    }

    #[test]
    fn flip_gives_deterministic_odd_record() {
        let model = ExecModel::ideal();
        let c = circuit(vec![
            rot(Q4, PI, 0.0),
            measure((Q3, Q4), Q4, Some(BasisValue::Down)),
        ]);
        for shot in 0..20 {
            let records = run_shot(&model, &c, None, shot_rng(1, 0, 0, shot)).unwrap();
            assert_eq!(records.len(), 1);
            assert_eq!(records[0].true_parity, Parity::Odd);
            assert_eq!(records[0].reported_parity, Parity::Odd);
            assert_eq!(records[0].reported_up, Some(true));
        }
    }

    #[test]
    fn partner_up_inverts_inference() {
        let model = ExecModel::ideal();
        let c = circuit(vec![
            rot(Q3, PI, 0.0),
            rot(Q4, PI, 0.0),
            measure((Q3, Q4), Q4, Some(BasisValue::Up)),
        ]);
        let records = run_shot(&model, &c, None, shot_rng(2, 0, 0, 0)).unwrap();
        assert_eq!(records[0].true_parity, Parity::Even);
        assert_eq!(records[0].reported_up, Some(true));
    }

    #[test]
    fn retention_skips_swap() {
        let mut model = ExecModel::ideal();
        model.reset.retain_probability = 1.0;
        let gate = crate::gates::calibrate_swap(
            (Q2, Q3),
            PI,
            &model.device,
            &PulseSettings::default(),
        )
        .unwrap();
        let c = circuit(vec![rot(Q3, PI, 0.0), NativeOp::Swap(gate)]);
        let mut engine = Engine::new(&model, shot_rng(3, 0, 0, 0)).unwrap();
        engine.run_circuit(&c).unwrap();
        assert!((engine.up_probability(Q3).unwrap() - 1.0).abs() < 1e-12);
        assert!(engine.up_probability(Q2).unwrap() < 1e-12);
        model.reset.retain_probability = 0.0;
        let mut engine = Engine::new(&model, shot_rng(3, 0, 0, 0)).unwrap();
        engine.run_circuit(&c).unwrap();
        assert!(engine.up_probability(Q3).unwrap() < 1e-12);
        assert!((engine.up_probability(Q2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_matches_exact_probabilities() {
        let mut model = ExecModel::ideal();
        model.readout = ReadoutModel::uniform(0.9, 0.8).unwrap();
        let theta = 0.9;
        let c = circuit(vec![
            rot(Q4, theta, 0.0),
            measure((Q3, Q4), Q4, Some(BasisValue::Down)),
        ]);
        let exact = run_exact(&model, &c, None).unwrap();
        let q_even = (theta / 2.0).cos().powi(2);
        let expect = reported_even_prob(
            q_even,
            PairFidelity {
                f_even: 0.9,
                f_odd: 0.8,
            },
        );
        assert!((exact[0].reported_even_prob - expect).abs() < 1e-12);
        assert!((exact[0].reported_up_prob.unwrap() - (1.0 - expect)).abs() < 1e-12);
        let n = 20_000;
        let hits = map_shots_seq(n, |shot| {
            let records = run_shot(&model, &c, None, shot_rng(4, 0, 0, shot as u64))?;
            Ok(u32::from(records[0].reported_parity == Parity::Even))
        })
        .unwrap()
        .iter()
        .sum::<u32>();
        let freq = hits as f64 / n as f64;
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (freq - expect).abs() < 4.0 * se,
            "freq {freq} expect {expect}"
        );
    }

    #[test]
    fn exact_refuses_stochastic_elements() {
        let noisy = ExecModel::noisy_defaults();
        let c = circuit(vec![NativeOp::Idle {
            qubits: vec![Q1],
            duration_s: 1e-6,
        }]);
        assert!(matches!(
            run_exact(&noisy, &c, None),
            Err(Error::Estimator(_))
        ));

        let mut retain = ExecModel::ideal();
        retain.reset.retain_probability = 0.1;
        let gate =
            crate::gates::calibrate_swap((Q2, Q3), PI, &retain.device, &PulseSettings::default())
                .unwrap();
        let c = circuit(vec![NativeOp::Swap(gate)]);
        assert!(matches!(
            run_exact(&retain, &c, None),
            Err(Error::Estimator(_))
        ));

        let ideal = ExecModel::ideal();
        let c = circuit(vec![rot(Q1, 0.3, 0.0)]);
        let inj = ErrorInjection {
            targets: vec![Q1],
            mode: InjectionMode::Bernoulli { p: 0.2 },
        };
        assert!(matches!(
            run_exact(&ideal, &c, Some((1, &inj))),
            Err(Error::Estimator(_))
        ));
    }

    #[test]
    fn exact_allows_noiseless_idle_under_noisy_model() {
        let mut model = ExecModel::noisy_defaults();
        model.reset = ResetModel::ideal();
        let c = circuit(vec![rot(Q1, 0.4, 0.0)]);
        assert!(run_exact(&model, &c, None).is_ok());
    }

    #[test]
    fn ramsey_point_matches_envelope() {
        let mut model = ExecModel::noisy_defaults();
        model.readout = ReadoutModel::ideal();
        model.reset = ResetModel::ideal();
        let t = 0.3e-6;
        let c = circuit(vec![
            rot(Q1, FRAC_PI_2, 0.0),
            NativeOp::Idle {
                qubits: vec![Q1],
                duration_s: t,
            },
            rot(Q1, FRAC_PI_2, 0.0),
            measure((Q1, Q2), Q1, Some(BasisValue::Down)),
        ]);
        let n = 30_000;
        let ups = map_shots(n, |shot| {
            let records = run_shot(&model, &c, None, shot_rng(5, 0, 0, shot as u64))?;
            Ok(u32::from(records[0].reported_up == Some(true)))
        })
        .unwrap()
        .iter()
        .sum::<u32>();
        let freq = ups as f64 / n as f64;
        let noise = model.noise.as_ref().unwrap().qubit(Q1).unwrap();
        let expect = crate::noise::ramsey_up_probability(noise, t);
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (freq - expect).abs() < 4.0 * se,
            "freq {freq} expect {expect}"
        );
    }

    #[test]
    fn echo_refocuses_quasi_static_noise_exactly() {
        let mut model = ExecModel::ideal();
        model.noise = Some(NoiseParams::from_qubits(vec![
            QubitNoise {
                sigma_qs_rad_per_s: 1e7,
                gamma_markov_hz: 0.0,
            };
            4
        ]));
        let t = 2e-6;
        let half = NativeOp::Idle {
            qubits: vec![Q1],
            duration_s: t / 2.0,
        };
        let c = circuit(vec![
            rot(Q1, FRAC_PI_2, 0.0),
            half.clone(),
            rot(Q1, PI, FRAC_PI_2),
            half,
            rot(Q1, FRAC_PI_2, 0.0),
        ]);
        for shot in 0..25 {
            let mut engine = Engine::new(&model, shot_rng(6, 0, 0, shot)).unwrap();
            engine.run_circuit(&c).unwrap();
            assert!(
                (engine.up_probability(Q1).unwrap() - 1.0).abs() < 1e-9,
                "shot {shot}"
            );
        }
    }

    #[test]
    fn residual_exchange_accumulates_conditional_phase() {
        let mut model = ExecModel::ideal();
        model.residual_exchange_hz = 1e5;
        let t = 2.5e-6;
        let c = circuit(vec![
            rot(Q3, PI, 0.0),
            rot(Q4, PI, 0.0),
            NativeOp::Idle {
                qubits: vec![Q3, Q4],
                duration_s: t,
            },
        ]);
        let mut engine = Engine::new(&model, shot_rng(7, 0, 0, 0)).unwrap();
        engine.run_circuit(&c).unwrap();
        let amp = engine.state().amplitudes()[12];
        assert!((amp - Complex64::new(0.0, -1.0)).norm() < 1e-10, "amp {amp}");
    }

    #[test]
    fn stochastic_injection_draws_are_always_consumed() {
        let mut model = ExecModel::ideal();
        model.readout = ReadoutModel::uniform(0.9, 0.8).unwrap();
        let c = circuit(vec![
            rot(Q4, 0.7, 0.0),
            measure((Q3, Q4), Q4, Some(BasisValue::Down)),
        ]);
        let zero = ErrorInjection {
            targets: vec![Q4],
            mode: InjectionMode::Bernoulli { p: 0.0 },
        };
        let one = ErrorInjection {
            targets: vec![Q4],
            mode: InjectionMode::Bernoulli { p: 1.0 },
        };
        for shot in 0..200 {
            let rng = || shot_rng(8, 0, 0, shot);
            let a = run_shot(&model, &c, Some((1, &zero)), rng()).unwrap();
            let b = run_shot(&model, &c, Some((1, &one)), rng()).unwrap();
            assert_eq!(a, b, "phase flips must not desynchronize the draw stream");
        }
    }

    #[test]
    fn same_seed_reproduces_records() {
        let model = ExecModel::noisy_defaults();
        let c = circuit(vec![
            rot(Q1, FRAC_PI_2, 0.0),
            NativeOp::Idle {
                qubits: vec![Q1, Q2],
                duration_s: 0.4e-6,
            },
            rot(Q1, FRAC_PI_2, 0.0),
            measure((Q1, Q2), Q1, Some(BasisValue::Down)),
        ]);
        let a = run_shot(&model, &c, None, shot_rng(9, 1, 2, 3)).unwrap();
        let b = run_shot(&model, &c, None, shot_rng(9, 1, 2, 3)).unwrap();
        assert_eq!(a, b);
        let mut any_different = false;
        for shot in 0..50 {
            let d = run_shot(&model, &c, None, shot_rng(9, 1, 2, shot)).unwrap();
            if d != a {
                any_different = true;
            }
        }
        assert!(any_different);
    }

    #[test]
    fn injection_index_bounds_checked() {
        let model = ExecModel::ideal();
        let c = circuit(vec![rot(Q1, 0.3, 0.0)]);
        let inj = ErrorInjection {
            targets: vec![Q1],
            mode: InjectionMode::PhaseAll { phi_rad: 0.5 },
        };
        assert!(matches!(
            run_shot(&model, &c, Some((2, &inj)), shot_rng(10, 0, 0, 0)),
            Err(Error::Injection(2))
        ));
        assert!(matches!(
            run_exact(&model, &c, Some((2, &inj))),
            Err(Error::Injection(2))
        ));
    }

    #[test]
    fn map_shots_matches_sequential() {
        let model = ExecModel::noisy_defaults();
        let c = circuit(vec![
            rot(Q1, FRAC_PI_2, 0.0),
            NativeOp::Idle {
                qubits: vec![Q1],
                duration_s: 0.2e-6,
            },
            rot(Q1, FRAC_PI_2, 0.0),
            measure((Q1, Q2), Q1, Some(BasisValue::Down)),
        ]);
        let run = |shot: usize| {
            let records = run_shot(&model, &c, None, shot_rng(11, 0, 0, shot as u64))?;
            Ok(records[0].reported_up == Some(true))
        };
        let par = map_shots(500, run).unwrap();
        let seq = map_shots_seq(500, run).unwrap();
        assert_eq!(par, seq);
    }
}
