use super::{
    curve_from_probs, find_record, reported_up, require_sweep,
    sweep_single_readout, Curve, Estimator, SweepSetup,
};
use crate::analysis::{fit_decay, DecayModel, FitResult};
use crate::compiler::{insert_readout_reset, Lowering};
use crate::error::{Error, Result};
use crate::exec::{map_shots, run_exact, run_shot, shot_rng};
use crate::gates::wrap_phase;
use crate::qubit::{Qubit, Q1, Q2, Q3, Q4};
use std::f64::consts::{FRAC_PI_2, PI};

/// Conditional-phase calibration fringes: analysis-phase sweeps on the
/// target with the control left down and prepared up, their sinusoid fits,
/// and the fitted phase difference.
#[derive(Clone, Debug)]
pub struct CphaseCalibration {
    pub control_off: Curve,
    pub control_on: Curve,
    pub fit_off: FitResult,
    pub fit_on: FitResult,
    pub phase_difference_rad: f64,
}

/// Ramsey-type fringe on `target`: quarter x pulse, the conditional-phase
/// gate on `(control, target)`, then a quarter pulse about a swept axis.
/// The fitted fringe shift between control-off and control-on runs is the
/// acquired conditional phase.
pub fn run_cphase_calibration(
    setup: &SweepSetup,
    control: Qubit,
    target: Qubit,
    conditional_phase_rad: f64,
    analysis_phases_rad: &[f64],
) -> Result<CphaseCalibration> {
    let device = &setup.model.device;
    device.require_edge((control, target))?;
    let n = analysis_phases_rad.len() as u64;
    let mut curves = Vec::with_capacity(2);
    for control_on in [false, true] {
        let offset = if control_on { n } else { 0 };
        let curve = sweep_single_readout(
            setup,
            analysis_phases_rad,
            target,
            true,
            offset,
            |phi| {
                let mut low = Lowering::new(device, setup.model.pulses);
                if control_on {
                    low.rotation(control, PI, 0.0)?;
                }
                low.rotation(target, FRAC_PI_2, 0.0)?;
                if conditional_phase_rad != 0.0 {
                    low.cphase((control, target), conditional_phase_rad)?;
                }
                low.rotation(target, FRAC_PI_2, phi)?;
                let circuit =
                    insert_readout_reset(low.finish()?, device, &setup.model.pulses, &[target])?;
                Ok((circuit, None))
            },
        )?;
        curves.push(curve);
    }
    let control_on = curves.pop().expect("two curves");
    let control_off = curves.pop().expect("two curves");
    let fit_off = fit_decay(&control_off, DecayModel::Sinusoid)?;
    let fit_on = fit_decay(&control_on, DecayModel::Sinusoid)?;
    let phase_difference_rad = wrap_phase(fit_off.param("phi0")? - fit_on.param("phi0")?);
    Ok(CphaseCalibration {
        control_off,
        control_on,
        fit_off,
        fit_on,
        phase_difference_rad,
    })
}

/// Up-probability curves after X(theta) on Q3 followed by a full swap onto
/// Q2: the excitation appears on Q2 and, when the swap is skipped by an
/// imperfect reset, residually on Q3.
#[derive(Clone, Debug)]
pub struct SwapDemo {
    pub q2: Curve,
    pub q3: Curve,
}

pub fn run_swap_demo(setup: &SweepSetup, thetas_rad: &[f64]) -> Result<SwapDemo> {
    setup.validate()?;
    require_sweep(thetas_rad)?;
    let device = &setup.model.device;
    let build = |theta: f64| -> Result<crate::circuit::NativeCircuit> {
        let mut low = Lowering::new(device, setup.model.pulses);
        low.rotation(Q3, theta, 0.0)?;
        low.swap((Q2, Q3), PI)?;
        insert_readout_reset(low.finish()?, device, &setup.model.pulses, &[Q2, Q3])
    };
    match setup.estimator {
        Estimator::Sampled => {
            let mut c2 = Vec::with_capacity(thetas_rad.len());
            let mut c3 = Vec::with_capacity(thetas_rad.len());
            for (i, &theta) in thetas_rad.iter().enumerate() {
                let circuit = build(theta)?;
                let pairs = map_shots(setup.shots_per_point as usize, |s| {
                    let rng =
                        shot_rng(setup.master_seed, setup.experiment_id, i as u64, s as u64);
                    let records = run_shot(setup.model, &circuit, None, rng)?;
                    let up2 = reported_up(find_record(&records, Q2)?)?;
                    let up3 = reported_up(find_record(&records, Q3)?)?;
                    Ok((up2, up3))
                })?;
                c2.push(pairs.iter().filter(|p| p.0).count() as u64);
                c3.push(pairs.iter().filter(|p| p.1).count() as u64);
            }
            Ok(SwapDemo {
                q2: Curve::from_counts(thetas_rad.to_vec(), &c2, setup.shots_per_point)?,
                q3: Curve::from_counts(thetas_rad.to_vec(), &c3, setup.shots_per_point)?,
            })
        }
        Estimator::Exact => {
            let mut p2 = Vec::with_capacity(thetas_rad.len());
            let mut p3 = Vec::with_capacity(thetas_rad.len());
            for &theta in thetas_rad {
                let circuit = build(theta)?;
                let outcomes = run_exact(setup.model, &circuit, None)?;
                for o in &outcomes {
                    let up = o.reported_up_prob.ok_or_else(|| {
                        Error::Estimator(format!("readout of {} lacks a partner value", o.read))
                    })?;
                    if o.read == Q2 {
                        p2.push(up);
                    } else if o.read == Q3 {
                        p3.push(up);
                    }
                }
            }
            Ok(SwapDemo {
                q2: curve_from_probs(thetas_rad, &p2, setup.shots_per_point)?,
                q3: curve_from_probs(thetas_rad, &p3, setup.shots_per_point)?,
            })
        }
    }
}

/// Target up-probability after the doubly-controlled flip, with the swept
/// control rotated by theta and the other control optionally flipped up.
#[derive(Clone, Debug)]
pub struct ToffoliTest {
    pub without_prep: Curve,
    pub with_prep: Curve,
}

pub fn run_toffoli_test(
    setup: &SweepSetup,
    swept_control: Qubit,
    thetas_rad: &[f64],
) -> Result<ToffoliTest> {
    let other = match swept_control {
        q if q == Q1 => Q3,
        q if q == Q3 => Q1,
        q => {
            return Err(Error::Estimator(format!(
                "swept control must be an ancilla of the target, got {q}"
            )))
        }
    };
    let device = &setup.model.device;
    let n = thetas_rad.len() as u64;
    let mut curves = Vec::with_capacity(2);
    for prep_on in [false, true] {
        let offset = if prep_on { n } else { 0 };
        let curve = sweep_single_readout(setup, thetas_rad, Q4, true, offset, |theta| {
            let mut low = Lowering::new(device, setup.model.pulses);
            low.rotation(swept_control, theta, 0.0)?;
            if prep_on {
                low.rotation(other, PI, 0.0)?;
            }
            low.toffoli((Q1, Q3), Q4)?;
            let circuit = insert_readout_reset(low.finish()?, device, &setup.model.pulses, &[Q4])?;
            Ok((circuit, None))
        })?;
        curves.push(curve);
    }
    let with_prep = curves.pop().expect("two curves");
    let without_prep = curves.pop().expect("two curves");
    Ok(ToffoliTest {
        without_prep,
        with_prep,
    })
}
