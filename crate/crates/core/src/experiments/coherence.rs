use super::{sweep_single_readout, Curve, SweepSetup};
use crate::compiler::{insert_readout_reset, Lowering};
use crate::error::{Error, Result};
use crate::qubit::Qubit;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Number of slices a continuous drive is chopped into so that idle noise
/// can act between rotation segments.
pub const DRIVE_SLICES: usize = 64;

fn check_durations(xs: &[f64]) -> Result<()> {
    for &t in xs {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidDuration(t));
        }
    }
    Ok(())
}

/// Resonant drive of swept duration on one qubit: y is the reported
/// up-probability. Noiseless limit y = sin^2(pi * rabi * t).
pub fn run_rabi(setup: &SweepSetup, qubit: Qubit, durations_s: &[f64]) -> Result<Curve> {
    check_durations(durations_s)?;
    let device = &setup.model.device;
    let rabi = device.rabi_hz(qubit)?;
    sweep_single_readout(setup, durations_s, qubit, true, 0, |t| {
        let mut low = Lowering::new(device, setup.model.pulses);
        if t > 0.0 {
            let slice_angle = TAU * rabi * t / DRIVE_SLICES as f64;
            let slice_time = t / DRIVE_SLICES as f64;
            for _ in 0..DRIVE_SLICES {
                low.rotation(qubit, slice_angle, 0.0)?;
                low.idle(vec![qubit], slice_time)?;
            }
        }
        let circuit = insert_readout_reset(low.finish()?, device, &setup.model.pulses, &[qubit])?;
        Ok((circuit, None))
    })
}

/// Free-evolution fringe: two quarter x pulses separated by a swept idle.
/// The envelope decays as exp(-(sigma t)^2 / 2) * exp(-gamma t).
pub fn run_ramsey(setup: &SweepSetup, qubit: Qubit, waits_s: &[f64]) -> Result<Curve> {
    check_durations(waits_s)?;
    let device = &setup.model.device;
    sweep_single_readout(setup, waits_s, qubit, true, 0, |t| {
        let mut low = Lowering::new(device, setup.model.pulses);
        low.rotation(qubit, FRAC_PI_2, 0.0)?;
        if t > 0.0 {
            low.idle(vec![qubit], t)?;
        }
        low.rotation(qubit, FRAC_PI_2, 0.0)?;
        let circuit = insert_readout_reset(low.finish()?, device, &setup.model.pulses, &[qubit])?;
        Ok((circuit, None))
    })
}

/// Echoed free evolution: a mid-wait pi pulse refocuses the quasi-static
/// offset, leaving the envelope exp(-gamma t).
pub fn run_hahn(setup: &SweepSetup, qubit: Qubit, waits_s: &[f64]) -> Result<Curve> {
    check_durations(waits_s)?;
    let device = &setup.model.device;
    sweep_single_readout(setup, waits_s, qubit, true, 0, |t| {
        let mut low = Lowering::new(device, setup.model.pulses);
        low.rotation(qubit, FRAC_PI_2, 0.0)?;
        if t > 0.0 {
            low.idle(vec![qubit], t / 2.0)?;
        }
        low.rotation(qubit, PI, FRAC_PI_2)?;
        if t > 0.0 {
            low.idle(vec![qubit], t / 2.0)?;
        }
        low.rotation(qubit, FRAC_PI_2, 0.0)?;
        let circuit = insert_readout_reset(low.finish()?, device, &setup.model.pulses, &[qubit])?;
        Ok((circuit, None))
    })
}
