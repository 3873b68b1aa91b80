pub mod codes;
pub mod coherence;
pub mod gatecal;

pub use crate::analysis::Curve;
pub use codes::{
    run_three_qubit_code_random, run_three_qubit_phase_sweep, run_two_qubit_code, CodeInput,
    CodeResult, CodeShot, SubsetSweep, TwoQubitEcho, TwoQubitOptions, TwoQubitOutcome,
};
pub use coherence::{run_hahn, run_rabi, run_ramsey};
pub use gatecal::{
    run_cphase_calibration, run_swap_demo, run_toffoli_test, CphaseCalibration, SwapDemo,
    ToffoliTest,
};

use crate::circuit::NativeCircuit;
use crate::error::{Error, Result};
use crate::exec::{map_shots, run_exact, run_shot, shot_rng, ExecModel, MeasureRecord};
use crate::noise::ErrorInjection;
use crate::qubit::Qubit;

/// How sweep points are evaluated: Monte Carlo shot sampling, or exact state
/// evolution where the model permits it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Sampled,
    Exact,
}

/// Shared runner context: the device/noise model, the per-point shot budget,
/// and the seed coordinates that make every run reproducible.
#[derive(Clone, Copy, Debug)]
pub struct SweepSetup<'a> {
    pub model: &'a ExecModel,
    pub shots_per_point: u64,
    pub master_seed: u64,
    pub experiment_id: u64,
    pub estimator: Estimator,
}

impl<'a> SweepSetup<'a> {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.shots_per_point == 0 {
            return Err(Error::Estimator("shots_per_point must be at least 1".into()));
        }
        Ok(())
    }
}

fn require_sweep(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Estimator("sweep is empty".into()));
    }
    Ok(())
}

fn find_record<'r>(records: &'r [MeasureRecord], read: Qubit) -> Result<&'r MeasureRecord> {
    records
        .iter()
        .find(|r| r.read == read)
        .ok_or_else(|| Error::Estimator(format!("no readout of {read} in circuit")))
}

fn reported_up(record: &MeasureRecord) -> Result<bool> {
    record
        .reported_up
        .ok_or_else(|| Error::Estimator(format!("readout of {} lacks a partner value", record.read)))
}

/// Counts shots whose readout of `read` reports the `success_up` value.
fn sampled_successes(
    setup: &SweepSetup,
    circuit: &NativeCircuit,
    injection: Option<(usize, &ErrorInjection)>,
    point: u64,
    read: Qubit,
    success_up: bool,
) -> Result<u64> {
    let flags = map_shots(setup.shots_per_point as usize, |s| {
        let rng = shot_rng(setup.master_seed, setup.experiment_id, point, s as u64);
        let records = run_shot(setup.model, circuit, injection, rng)?;
        Ok(reported_up(find_record(&records, read)?)? == success_up)
    })?;
    Ok(flags.into_iter().filter(|&b| b).count() as u64)
}

fn exact_success_prob(
    setup: &SweepSetup,
    circuit: &NativeCircuit,
    injection: Option<(usize, &ErrorInjection)>,
    read: Qubit,
    success_up: bool,
) -> Result<f64> {
    let outcomes = run_exact(setup.model, circuit, injection)?;
    let outcome = outcomes
        .iter()
        .find(|o| o.read == read)
        .ok_or_else(|| Error::Estimator(format!("no readout of {read} in circuit")))?;
    let up = outcome
        .reported_up_prob
        .ok_or_else(|| Error::Estimator(format!("readout of {read} lacks a partner value")))?;
    Ok(if success_up { up } else { 1.0 - up })
}

/// Builds a curve from exact probabilities, with binomial-scale error bars
/// for the configured shot budget (same floor as [`Curve::from_counts`]).
fn curve_from_probs(xs: &[f64], probs: &[f64], shots: u64) -> Result<Curve> {
    let n = shots as f64;
    let y_err = probs
        .iter()
        .map(|&p| (p * (1.0 - p) / n).sqrt().max(0.05 / n.sqrt()))
        .collect();
    Curve::new(xs.to_vec(), probs.to_vec(), y_err, vec![shots; xs.len()])
}

/// Runs one sweep whose observable is a single pair readout of `read`.
/// `build` produces, per x value, the circuit and an optional error
/// injection; `point_offset` keeps seed streams distinct between sibling
/// curves of the same experiment.
fn sweep_single_readout<F>(
    setup: &SweepSetup,
    xs: &[f64],
    read: Qubit,
    success_up: bool,
    point_offset: u64,
    mut build: F,
) -> Result<Curve>
where
    F: FnMut(f64) -> Result<(NativeCircuit, Option<(usize, ErrorInjection)>)>,
{
    setup.validate()?;
    require_sweep(xs)?;
    match setup.estimator {
        Estimator::Sampled => {
            let mut counts = Vec::with_capacity(xs.len());
            for (i, &x) in xs.iter().enumerate() {
                let (circuit, injection) = build(x)?;
                let inj = injection.as_ref().map(|(k, e)| (*k, e));
                counts.push(sampled_successes(
                    setup,
                    &circuit,
                    inj,
                    point_offset + i as u64,
                    read,
                    success_up,
                )?);
            }
            Curve::from_counts(xs.to_vec(), &counts, setup.shots_per_point)
        }
        Estimator::Exact => {
            let mut probs = Vec::with_capacity(xs.len());
            for &x in xs {
                let (circuit, injection) = build(x)?;
                let inj = injection.as_ref().map(|(k, e)| (*k, e));
                probs.push(exact_success_prob(setup, &circuit, inj, read, success_up)?);
            }
            curve_from_probs(xs, &probs, setup.shots_per_point)
        }
    }
}
