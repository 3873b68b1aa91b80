use crate::circuit::{NativeCircuit, NativeOp};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::qubit::Qubit;
use crate::state::Unitary;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

pub const DEFAULT_J0_HZ: f64 = 10e6;
pub const DEFAULT_RAMP_FRACTION: f64 = 0.5;
pub const DEFAULT_RABI_HZ: f64 = 5e6;
/// Allowed mismatch between a swap pulse's modulation frequency and the edge's
/// Zeeman-splitting difference.
pub const RESONANCE_TOL_HZ: f64 = 1e3;
/// Calibration targets are met to this phase accuracy.
pub const CALIBRATION_TOL_RAD: f64 = 1e-6;

/// Shared exchange-pulse parameters used when synthesizing two-qubit gates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PulseSettings {
    pub j0_hz: f64,
    pub ramp_fraction: f64,
}

impl Default for PulseSettings {
    fn default() -> Self {
        PulseSettings {
            j0_hz: DEFAULT_J0_HZ,
            ramp_fraction: DEFAULT_RAMP_FRACTION,
        }
    }
}

/// Wraps a phase into (-pi, pi].
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit rotation about an axis in the xy-plane:
/// exp(-i (theta/2) (cos(phi) X + sin(phi) Y)).
/// The pi/2 convention: X means theta = pi/2 about phi = 0, X^2 theta = pi,
/// X^-1 theta = -pi/2; Y variants use phi = pi/2.
#[derive(Clone, Copy, Debug)]
pub struct RotationGate {
    pub qubit: Qubit,
    pub axis_angle_rad: f64,
    pub rotation_angle_rad: f64,
    pub duration_s: f64,
}

impl RotationGate {
    pub fn new(qubit: Qubit, rotation_angle_rad: f64, axis_angle_rad: f64, rabi_hz: f64) -> Self {
        RotationGate {
            qubit,
            axis_angle_rad,
            rotation_angle_rad,
            duration_s: rotation_angle_rad.abs() / (TAU * rabi_hz),
        }
    }

    pub fn x(qubit: Qubit, rabi_hz: f64) -> Self {
        Self::new(qubit, FRAC_PI_2, 0.0, rabi_hz)
    }

    pub fn y(qubit: Qubit, rabi_hz: f64) -> Self {
        Self::new(qubit, FRAC_PI_2, FRAC_PI_2, rabi_hz)
    }

    pub fn x2(qubit: Qubit, rabi_hz: f64) -> Self {
        Self::new(qubit, PI, 0.0, rabi_hz)
    }

    pub fn y2(qubit: Qubit, rabi_hz: f64) -> Self {
        Self::new(qubit, PI, FRAC_PI_2, rabi_hz)
    }

    pub fn x_inv(qubit: Qubit, rabi_hz: f64) -> Self {
        Self::new(qubit, -FRAC_PI_2, 0.0, rabi_hz)
    }

    pub fn y_inv(qubit: Qubit, rabi_hz: f64) -> Self {
        Self::new(qubit, -FRAC_PI_2, FRAC_PI_2, rabi_hz)
    }

    pub fn unitary(&self) -> Unitary {
        let half = self.rotation_angle_rad / 2.0;
        let (cos, sin) = (half.cos(), half.sin());
        let e_m = Complex64::from_polar(1.0, -self.axis_angle_rad);
        let e_p = Complex64::from_polar(1.0, self.axis_angle_rad);
        Unitary::new(
            2,
            vec![
                c(cos, 0.0),
                c(0.0, -sin) * e_m,
                c(0.0, -sin) * e_p,
                c(cos, 0.0),
            ],
        )
        .expect("rotation matrices are unitary by construction")
    }
}

/// Tukey-windowed exchange pulse on a device edge. `mod_freq_hz` is 0 for
/// static (conditional-phase) pulses and the Zeeman difference for swaps.
#[derive(Clone, Copy, Debug)]
pub struct ExchangePulse {
    pub edge: (Qubit, Qubit),
    pub peak_exchange_hz: f64,
    pub duration_s: f64,
    pub ramp_fraction: f64,
    pub mod_freq_hz: f64,
}

impl ExchangePulse {
    /// Window value in [0,1]: raised-cosine ramps over ramp_fraction*duration/2
    /// at each end, flat top between.
    pub fn envelope(&self, t: f64) -> f64 {
        let tp = self.duration_s;
        if t < 0.0 || t > tp {
            return 0.0;
        }
        let ramp = self.ramp_fraction * tp / 2.0;
        if ramp <= 0.0 {
            return 1.0;
        }
        if t < ramp {
            0.5 * (1.0 - (PI * t / ramp).cos())
        } else if t > tp - ramp {
            0.5 * (1.0 - (PI * (tp - t) / ramp).cos())
        } else {
            1.0
        }
    }

    /// Closed form of the window integral: duration * (1 - ramp_fraction/2).
    pub fn envelope_integral_s(&self) -> f64 {
        self.duration_s * (1.0 - self.ramp_fraction / 2.0)
    }

    /// Time-integrated exchange (dimensionless pulse area).
    pub fn exchange_area(&self) -> f64 {
        self.peak_exchange_hz * self.envelope_integral_s()
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::DegeneratePulse);
        }
        if !(self.peak_exchange_hz > 0.0) {
            return Err(Error::Domain {
                name: "peak_exchange_hz",
                value: self.peak_exchange_hz,
                domain: "(0, inf)",
            });
        }
        if !(0.0..=1.0).contains(&self.ramp_fraction) {
            return Err(Error::Domain {
                name: "ramp_fraction",
                value: self.ramp_fraction,
                domain: "[0, 1]",
            });
        }
        Ok(())
    }
}

/// Two-qubit conditional phase diag(1, 1, 1, e^{i phase}) in the edge basis
/// (dd, du, ud, uu). CZ is phase pi; CS^-1 is phase -pi/2.
#[derive(Clone, Copy, Debug)]
pub struct ConditionalPhaseGate {
    pub edge: (Qubit, Qubit),
    pub phase_rad: f64,
    pub pulse: ExchangePulse,
}

impl ConditionalPhaseGate {
    pub fn unitary(&self) -> Unitary {
        let mut e = vec![Complex64::ZERO; 16];
        e[0] = Complex64::ONE;
        e[5] = Complex64::ONE;
        e[10] = Complex64::ONE;
        e[15] = Complex64::from_polar(1.0, self.phase_rad);
        Unitary::new(4, e).expect("diagonal phase matrices are unitary")
    }
}

/// Accumulated conditional phase of a static exchange pulse, wrapped into
/// (-pi, pi].
pub fn conditional_phase_from_pulse(pulse: &ExchangePulse) -> Result<ConditionalPhaseGate> {
    pulse.validate()?;
    if pulse.mod_freq_hz != 0.0 {
        return Err(Error::Domain {
            name: "mod_freq_hz",
            value: pulse.mod_freq_hz,
            domain: "{0} for static conditional-phase pulses",
        });
    }
    let raw = TAU * pulse.exchange_area();
    Ok(ConditionalPhaseGate {
        edge: pulse.edge,
        phase_rad: wrap_phase(raw),
        pulse: *pulse,
    })
}

/// Shortest pulse at fixed peak exchange and ramp fraction whose accumulated
/// conditional phase equals `target_phase_rad`.
pub fn calibrate_cphase(
    edge: (Qubit, Qubit),
    target_phase_rad: f64,
    device: &DeviceModel,
    pulses: &PulseSettings,
) -> Result<ExchangePulse> {
    device.require_edge(edge)?;
    if !(target_phase_rad > -PI && target_phase_rad <= PI) {
        return Err(Error::Domain {
            name: "target_phase_rad",
            value: target_phase_rad,
            domain: "(-pi, pi]",
        });
    }
    if !(pulses.j0_hz > 0.0) {
        return Err(Error::Domain {
            name: "j0_hz",
            value: pulses.j0_hz,
            domain: "(0, inf)",
        });
    }
    if target_phase_rad == 0.0 {
        return Err(Error::Calibration {
            target_phase_rad: 0.0,
        });
    }
    let raw = if target_phase_rad > 0.0 {
        target_phase_rad
    } else {
        target_phase_rad + TAU
    };
    let duration_s = raw / (TAU * pulses.j0_hz * (1.0 - pulses.ramp_fraction / 2.0));
    let pulse = ExchangePulse {
        edge,
        peak_exchange_hz: pulses.j0_hz,
        duration_s,
        ramp_fraction: pulses.ramp_fraction,
        mod_freq_hz: 0.0,
    };
    let achieved = conditional_phase_from_pulse(&pulse)?.phase_rad;
    if wrap_phase(achieved - target_phase_rad).abs() > CALIBRATION_TOL_RAD {
        return Err(Error::Calibration { target_phase_rad });
    }
    Ok(pulse)
}

/// Calibrated conditional-phase gate on an edge (convenience wrapper).
pub fn cphase_gate(
    edge: (Qubit, Qubit),
    target_phase_rad: f64,
    device: &DeviceModel,
    pulses: &PulseSettings,
) -> Result<ConditionalPhaseGate> {
    conditional_phase_from_pulse(&calibrate_cphase(edge, target_phase_rad, device, pulses)?)
}

/// Exchange pulse modulated at the edge's Zeeman difference, rotating the
/// odd-parity subspace {du, ud} by `swap_angle_rad` (pi = full swap).
#[derive(Clone, Copy, Debug)]
pub struct ResonantSwapGate {
    pub edge: (Qubit, Qubit),
    pub swap_angle_rad: f64,
    pub pulse: ExchangePulse,
}

impl ResonantSwapGate {
    pub fn unitary(&self) -> Unitary {
        let half = self.swap_angle_rad / 2.0;
        let (cos, sin) = (half.cos(), half.sin());
        let mut e = vec![Complex64::ZERO; 16];
        e[0] = Complex64::ONE;
        e[15] = Complex64::ONE;
        e[5] = c(cos, 0.0);
        e[6] = c(0.0, -sin);
        e[9] = c(0.0, -sin);
        e[10] = c(cos, 0.0);
        Unitary::new(4, e).expect("swap rotations are unitary")
    }
}

/// Rotating-frame two-level model on the odd subspace: effective Rabi rate
/// envelope(t) * J0 / 2, so swap_angle = pi * J0 * duration * (1 - ramp/2).
pub fn resonant_swap_unitary(gate: &ResonantSwapGate, device: &DeviceModel) -> Result<Unitary> {
    gate.pulse.validate()?;
    let delta_hz = device.zeeman_diff_hz(gate.edge)?;
    if (gate.pulse.mod_freq_hz - delta_hz).abs() > RESONANCE_TOL_HZ {
        return Err(Error::OffResonance {
            f_mod_hz: gate.pulse.mod_freq_hz,
            delta_hz,
            tol_hz: RESONANCE_TOL_HZ,
        });
    }
    Ok(gate.unitary())
}

/// Resonant swap pulse calibrated for `swap_angle_rad` on an edge.
pub fn calibrate_swap(
    edge: (Qubit, Qubit),
    swap_angle_rad: f64,
    device: &DeviceModel,
    pulses: &PulseSettings,
) -> Result<ResonantSwapGate> {
    device.require_edge(edge)?;
    if !(swap_angle_rad > 0.0) {
        return Err(Error::Domain {
            name: "swap_angle_rad",
            value: swap_angle_rad,
            domain: "(0, inf)",
        });
    }
    let duration_s = swap_angle_rad / (PI * pulses.j0_hz * (1.0 - pulses.ramp_fraction / 2.0));
    let pulse = ExchangePulse {
        edge,
        peak_exchange_hz: pulses.j0_hz,
        duration_s,
        ramp_fraction: pulses.ramp_fraction,
        mod_freq_hz: device.zeeman_diff_hz(edge)?,
    };
    Ok(ResonantSwapGate {
        edge,
        swap_angle_rad,
        pulse,
    })
}

/// Relative-phase Toffoli on (c1, c2) -> target using only the two
/// control-target edges: conditional phases interleaved with target
/// rotations. On control basis states the target map is proportional to the
/// identity except for both-up, which is proportional to a pi flip; the
/// leftover factor is diagonal on the controls.
pub fn toffoli_like(
    controls: (Qubit, Qubit),
    target: Qubit,
    device: &DeviceModel,
    pulses: &PulseSettings,
) -> Result<NativeCircuit> {
    let (c1, c2) = controls;
    device.require_edge((c1, target))?;
    device.require_edge((c2, target))?;
    let rabi = device.rabi_hz(target)?;
    let cz1 = cphase_gate((c1, target), PI, device, pulses)?;
    let cs1 = cphase_gate((c2, target), -FRAC_PI_2, device, pulses)?;
    let ops = vec![
        NativeOp::CPhase(cz1),
        NativeOp::Rotation(RotationGate::y_inv(target, rabi)),
        NativeOp::CPhase(cs1),
        NativeOp::Rotation(RotationGate::y(target, rabi)),
        NativeOp::CPhase(cz1),
        NativeOp::Rotation(RotationGate::y(target, rabi)),
        NativeOp::CPhase(cs1),
        NativeOp::Rotation(RotationGate::y_inv(target, rabi)),
    ];
    NativeCircuit::new(device.n_qubits(), ops, vec![0.0; device.n_qubits()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceModel;
    use crate::qubit::{Q1, Q2, Q3, Q4};
    use crate::state::StateVector;

    // Composite Simpson quadrature: independent oracle for the window integral.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn device() -> DeviceModel {
        DeviceModel::default()
    }

    #[test]
    fn rotation_matrix_entries() {
        let x = RotationGate::x(Q1, DEFAULT_RABI_HZ).unitary();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x.get(0, 0) - c(r, 0.0)).norm() < 1e-12);
        assert!((x.get(0, 1) - c(0.0, -r)).norm() < 1e-12);
        assert!((x.get(1, 0) - c(0.0, -r)).norm() < 1e-12);
        let y = RotationGate::y(Q1, DEFAULT_RABI_HZ).unitary();
        assert!((y.get(0, 1) - c(-r, 0.0)).norm() < 1e-12);
        assert!((y.get(1, 0) - c(r, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn x2_flips_down_to_up() {
        let mut s = StateVector::new(1).unwrap();
        s.apply(&RotationGate::x2(Q1, DEFAULT_RABI_HZ).unitary(), &[Q1])
            .unwrap();
        assert!((s.qubit_up_probability(Q1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_makes_equal_superposition() {
        let mut s = StateVector::new(1).unwrap();
        s.apply(&RotationGate::y(Q1, DEFAULT_RABI_HZ).unitary(), &[Q1])
            .unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - c(r, 0.0)).norm() < 1e-12);
        assert!((s.amplitudes()[1] - c(r, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation_sweep_gives_rabi_fringe() {
        for i in 0..25 {
            let theta = i as f64 * 0.26;
            let mut s = StateVector::new(1).unwrap();
            let g = RotationGate::new(Q1, theta, 0.0, DEFAULT_RABI_HZ);
            s.apply(&g.unitary(), &[Q1]).unwrap();
            let expect = (theta / 2.0).sin().powi(2);
            assert!((s.qubit_up_probability(Q1).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_matches_quadrature_oracle() {
        for &alpha in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let pulse = ExchangePulse {
                edge: (Q1, Q4),
                peak_exchange_hz: 1.0,
                duration_s: 1.0,
                ramp_fraction: alpha,
                mod_freq_hz: 0.0,
            };
            let numeric = simpson(|t| pulse.envelope(t), 0.0, 1.0, 20_000);
            assert!(
                (numeric - pulse.envelope_integral_s()).abs() < 1e-8,
                "alpha {alpha}: simpson {numeric} vs closed form {}",
                pulse.envelope_integral_s()
            );
        }
    }

    #[test]
    fn envelope_bounded_and_symmetric() {
        let pulse = ExchangePulse {
            edge: (Q1, Q4),
            peak_exchange_hz: 1.0,
            duration_s: 2.0,
            ramp_fraction: 0.6,
            mod_freq_hz: 0.0,
        };
        for i in 0..=200 {
            let t = 2.0 * i as f64 / 200.0;
            let v = pulse.envelope(t);
            assert!((0.0..=1.0).contains(&v));
            assert!((v - pulse.envelope(2.0 - t)).abs() < 1e-12);
        }
        assert_eq!(pulse.envelope(-0.1), 0.0);
        assert_eq!(pulse.envelope(2.1), 0.0);
    }

    #[test]
    fn half_area_gives_cz_phase() {
        // area 1/2 -> phase 2*pi/2 = pi, for rectangular and ramped windows
        for &(alpha, tp) in &[(0.0, 50e-9), (0.5, 50e-9 / 0.75)] {
            let pulse = ExchangePulse {
                edge: (Q1, Q4),
                peak_exchange_hz: DEFAULT_J0_HZ,
                duration_s: tp,
                ramp_fraction: alpha,
                mod_freq_hz: 0.0,
            };
            assert!((pulse.exchange_area() - 0.5).abs() < 1e-12);
            let gate = conditional_phase_from_pulse(&pulse).unwrap();
            assert!((gate.phase_rad - PI).abs() < 1e-9);
        }
    }

    #[test]
    fn three_quarter_area_wraps_to_minus_half_pi() {
        let pulse = ExchangePulse {
            edge: (Q1, Q4),
            peak_exchange_hz: DEFAULT_J0_HZ,
            duration_s: 75e-9,
            ramp_fraction: 0.0,
            mod_freq_hz: 0.0,
        };
        assert!((pulse.exchange_area() - 0.75).abs() < 1e-12);
        let gate = conditional_phase_from_pulse(&pulse).unwrap();
        assert!((gate.phase_rad + FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn degenerate_pulse_rejected() {
        let pulse = ExchangePulse {
            edge: (Q1, Q4),
            peak_exchange_hz: DEFAULT_J0_HZ,
            duration_s: 0.0,
            ramp_fraction: 0.0,
            mod_freq_hz: 0.0,
        };
        assert!(matches!(
            conditional_phase_from_pulse(&pulse),
            Err(Error::DegeneratePulse)
        ));
    }

    #[test]
    fn calibrate_cz_duration() {
        let settings = PulseSettings {
            j0_hz: DEFAULT_J0_HZ,
            ramp_fraction: 0.0,
        };
        let pulse = calibrate_cphase((Q1, Q4), PI, &device(), &settings).unwrap();
        assert!((pulse.duration_s - 50e-9).abs() < 1e-15);
    }

    #[test]
    fn calibrate_cs_inv_duration() {
        let settings = PulseSettings {
            j0_hz: DEFAULT_J0_HZ,
            ramp_fraction: 0.0,
        };
        let pulse = calibrate_cphase((Q1, Q4), -FRAC_PI_2, &device(), &settings).unwrap();
        assert!((pulse.duration_s - 75e-9).abs() < 1e-15);
    }

    #[test]
    fn calibrate_rejects_zero_target() {
        assert!(matches!(
            calibrate_cphase((Q1, Q4), 0.0, &device(), &PulseSettings::default()),
            Err(Error::Calibration { .. })
        ));
    }

    #[test]
    fn calibrate_rejects_missing_edge() {
        assert!(matches!(
            calibrate_cphase((Q1, Q3), PI, &device(), &PulseSettings::default()),
            Err(Error::MissingEdge(_, _))
        ));
    }

    #[test]
    fn calibration_round_trips_across_targets() {
        let dev = device();
        for i in 1..=12 {
            let target = -PI + i as f64 * (TAU / 13.0);
            if target == 0.0 {
                continue;
            }
            let pulse = calibrate_cphase((Q3, Q4), target, &dev, &PulseSettings::default()).unwrap();
            let got = conditional_phase_from_pulse(&pulse).unwrap().phase_rad;
            assert!(
                wrap_phase(got - target).abs() < CALIBRATION_TOL_RAD,
                "target {target} got {got}"
            );
        }
    }

    #[test]
    fn conditional_phase_additivity() {
        let dev = device();
        let settings = PulseSettings::default();
        let g1 = cphase_gate((Q1, Q4), 0.7, &dev, &settings).unwrap();
        let g2 = cphase_gate((Q1, Q4), 1.9, &dev, &settings).unwrap();
        let combined = cphase_gate((Q1, Q4), wrap_phase(0.7 + 1.9), &dev, &settings).unwrap();
        let product = g2.unitary().mul(&g1.unitary()).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                assert!((product.get(r, col) - combined.unitary().get(r, col)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn cz_is_self_inverse() {
        let g = cphase_gate((Q1, Q4), PI, &device(), &PulseSettings::default()).unwrap();
        let sq = g.unitary().mul(&g.unitary()).unwrap();
        let id = Unitary::identity(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((sq.get(i, j) - id.get(i, j)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn full_swap_exchanges_odd_states() {
        let gate = calibrate_swap((Q2, Q3), PI, &device(), &PulseSettings::default()).unwrap();
        let u = resonant_swap_unitary(&gate, &device()).unwrap();
        // |du> (local index 1) -> -i |ud> (local index 2)
        assert!((u.get(2, 1) - c(0.0, -1.0)).norm() < 1e-12);
        assert!(u.get(1, 1).norm() < 1e-12);
        assert!((u.get(0, 0) - Complex64::ONE).norm() < 1e-12);
        assert!((u.get(3, 3) - Complex64::ONE).norm() < 1e-12);
    }

    #[test]
    fn swap_transfers_excitation() {
        let dev = device();
        let gate = calibrate_swap((Q2, Q3), PI, &dev, &PulseSettings::default()).unwrap();
        let mut s = StateVector::new(4).unwrap();
        let theta = 1.1;
        s.apply(
            &RotationGate::new(Q3, theta, 0.0, DEFAULT_RABI_HZ).unitary(),
            &[Q3],
        )
        .unwrap();
        s.apply(&resonant_swap_unitary(&gate, &dev).unwrap(), &[Q2, Q3])
            .unwrap();
        let expect = (theta / 2.0).sin().powi(2);
        assert!((s.qubit_up_probability(Q2).unwrap() - expect).abs() < 1e-12);
        assert!(s.qubit_up_probability(Q3).unwrap() < 1e-12);
    }

    #[test]
    fn off_resonant_swap_rejected() {
        let dev = device();
        let mut gate = calibrate_swap((Q2, Q3), PI, &dev, &PulseSettings::default()).unwrap();
        gate.pulse.mod_freq_hz += 5e3;
        assert!(matches!(
            resonant_swap_unitary(&gate, &dev),
            Err(Error::OffResonance { .. })
        ));
    }

    #[test]
    fn swap_conjugates_single_qubit_operators() {
        let gate = calibrate_swap((Q2, Q3), PI, &device(), &PulseSettings::default()).unwrap();
        let s = gate.unitary();
        let sd = s.dagger();
        let paulis: [Vec<Complex64>; 3] = [
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ];
        for p in paulis {
            let a = Unitary::new(2, p).unwrap();
            // A on the first (most significant) edge qubit
            let mut a_i = vec![Complex64::ZERO; 16];
            let mut i_a = vec![Complex64::ZERO; 16];
            for r in 0..4 {
                for col in 0..4 {
                    if r & 1 == col & 1 {
                        a_i[r * 4 + col] = a.get(r >> 1, col >> 1);
                    }
                    if r >> 1 == col >> 1 {
                        i_a[r * 4 + col] = a.get(r & 1, col & 1);
                    }
                }
            }
            let a_i = Unitary::new(4, a_i).unwrap();
            let conj = sd.mul(&a_i.mul(&s).unwrap()).unwrap();
            for r in 0..4 {
                for col in 0..4 {
                    assert!(
                        (conj.get(r, col).norm() - i_a[r * 4 + col].norm()).abs() < 1e-9,
                        "entry magnitudes differ at ({r},{col})"
                    );
                }
            }
        }
    }

    #[test]
    fn toffoli_structure_uses_only_allowed_resources() {
        let circ = toffoli_like((Q1, Q3), Q4, &device(), &PulseSettings::default()).unwrap();
        let mut phase_edges = Vec::new();
        for op in circ.ops() {
            match op {
                NativeOp::Rotation(g) => assert_eq!(g.qubit, Q4),
                NativeOp::CPhase(g) => phase_edges.push(g.edge),
                other => panic!("unexpected op {other:?}"),
            }
        }
        assert_eq!(phase_edges.len(), 4);
        assert!(phase_edges.iter().all(|e| *e == (Q1, Q4) || *e == (Q3, Q4)));
    }

    #[test]
    fn toffoli_requires_both_edges() {
        // Q2's edges are (Q1,Q2) and (Q2,Q3); (Q2,Q4) is missing
        assert!(matches!(
            toffoli_like((Q1, Q2), Q4, &device(), &PulseSettings::default()),
            Err(Error::MissingEdge(_, _))
        ));
    }

    #[test]
    fn wrap_phase_lands_in_half_open_interval() {
        for i in -20..=20 {
            let phi = i as f64 * 0.7;
            let w = wrap_phase(phi);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            let diff = (phi - w).rem_euclid(TAU);
            assert!(diff < 1e-9 || (diff - TAU).abs() < 1e-9);
        }
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(1.5 * PI) + FRAC_PI_2).abs() < 1e-12);
    }
}
