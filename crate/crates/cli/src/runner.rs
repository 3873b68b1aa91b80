use crate::config::{Action, Experiment, RunConfig};
use crate::output::{fit_file_name, write_curve, write_json};
use flipcode::analysis::{fit_decay, fit_gamma_model, DecayModel, FitResult, GammaModelParams};
use flipcode::experiments::{
    run_cphase_calibration, run_hahn, run_rabi, run_ramsey, run_swap_demo,
    run_three_qubit_code_random, run_three_qubit_phase_sweep, run_toffoli_test,
    run_two_qubit_code, Curve, SweepSetup, TwoQubitEcho, TwoQubitOptions,
};
use serde_json::json;
use std::fmt;
use std::path::Path;

/// A failed experiment: reported in error.json and exits with status 3.
#[derive(Debug)]
pub struct RunError {
    pub experiment: String,
    pub message: String,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "experiment `{}` failed: {}", self.experiment, self.message)
    }
}

pub struct ExperimentReport {
    pub name: String,
    pub outputs: Vec<String>,
}

struct Context<'a> {
    name: &'a str,
    dir: &'a Path,
    outputs: Vec<String>,
}

impl<'a> Context<'a> {
    fn fail(&self, message: impl fmt::Display) -> RunError {
        RunError {
            experiment: self.name.to_string(),
            message: message.to_string(),
        }
    }

    fn curve(&mut self, file_name: String, curve: &Curve) -> Result<(), RunError> {
        write_curve(self.dir, &file_name, curve).map_err(|e| self.fail(e))?;
        self.outputs.push(file_name);
        Ok(())
    }

    fn json(&mut self, file_name: String, value: &serde_json::Value) -> Result<(), RunError> {
        write_json(self.dir, &file_name, value).map_err(|e| self.fail(e))?;
        self.outputs.push(file_name);
        Ok(())
    }
}

fn decay_json(fit: &FitResult) -> serde_json::Value {
    let tau_us = fit.params.get("tau").map(|tau| tau * 1e6);
    json!({ "fit": fit, "tau_us": tau_us })
}

/// Runs one experiment and writes its output files as soon as they exist, so
/// a later failure still leaves the completed curves on disk.
pub fn execute(
    experiment: &Experiment,
    index: u64,
    config: &RunConfig,
    dir: &Path,
) -> Result<ExperimentReport, RunError> {
    let setup = SweepSetup {
        model: &config.model,
        shots_per_point: experiment.shots,
        master_seed: config.master_seed,
        experiment_id: index,
        estimator: experiment.estimator.to_estimator(),
    };
    let mut ctx = Context {
        name: &experiment.name,
        dir,
        outputs: Vec::new(),
    };
    let name = &experiment.name;
    match &experiment.action {
        Action::Rabi { qubit, durations_s } => {
            let curve = run_rabi(&setup, *qubit, durations_s).map_err(|e| ctx.fail(e))?;
            ctx.curve(format!("{name}.csv"), &curve)?;
        }
        Action::Ramsey { qubit, waits_s, fit } => {
            let curve = run_ramsey(&setup, *qubit, waits_s).map_err(|e| ctx.fail(e))?;
            ctx.curve(format!("{name}.csv"), &curve)?;
            if *fit {
                let fit = fit_decay(&curve, DecayModel::Gaussian).map_err(|e| ctx.fail(e))?;
                ctx.json(fit_file_name(name), &decay_json(&fit))?;
            }
        }
        Action::Hahn { qubit, waits_s, fit } => {
            let curve = run_hahn(&setup, *qubit, waits_s).map_err(|e| ctx.fail(e))?;
            ctx.curve(format!("{name}.csv"), &curve)?;
            if *fit {
                let fit = fit_decay(&curve, DecayModel::Exponential).map_err(|e| ctx.fail(e))?;
                ctx.json(fit_file_name(name), &decay_json(&fit))?;
            }
        }
        Action::CphaseCalibration {
            control,
            target,
            conditional_phase_rad,
            analysis_phases_rad,
        } => {
            let cal = run_cphase_calibration(
                &setup,
                *control,
                *target,
                *conditional_phase_rad,
                analysis_phases_rad,
            )
            .map_err(|e| ctx.fail(e))?;
            ctx.curve(format!("{name}_off.csv"), &cal.control_off)?;
            ctx.curve(format!("{name}_on.csv"), &cal.control_on)?;
            ctx.json(
                fit_file_name(name),
                &json!({
                    "fit_off": cal.fit_off,
                    "fit_on": cal.fit_on,
                    "phase_difference_rad": cal.phase_difference_rad,
                    "phase_difference_pi": cal.phase_difference_rad / std::f64::consts::PI,
                }),
            )?;
        }
        Action::SwapDemo { thetas_rad } => {
            let demo = run_swap_demo(&setup, thetas_rad).map_err(|e| ctx.fail(e))?;
            ctx.curve(format!("{name}_q2.csv"), &demo.q2)?;
            ctx.curve(format!("{name}_q3.csv"), &demo.q3)?;
        }
        Action::ToffoliTest {
            swept_control,
            thetas_rad,
        } => {
            let test =
                run_toffoli_test(&setup, *swept_control, thetas_rad).map_err(|e| ctx.fail(e))?;
            ctx.curve(format!("{name}_noprep.csv"), &test.without_prep)?;
            ctx.curve(format!("{name}_prep.csv"), &test.with_prep)?;
        }
        Action::TwoQubitCode {
            ancilla,
            input,
            echo,
            waits_s,
            fit,
        } => {
            let opts = TwoQubitOptions {
                ancilla: *ancilla,
                input: *input,
                echo: *echo,
                fit_tau: false,
            };
            let outcome = run_two_qubit_code(&setup, &opts, waits_s).map_err(|e| ctx.fail(e))?;
            ctx.curve(format!("{name}.csv"), &outcome.curve)?;
            if *fit {
                let model = match echo {
                    TwoQubitEcho::None => DecayModel::Gaussian,
                    TwoQubitEcho::AncillaY2 => DecayModel::Exponential,
                };
                let fit = fit_decay(&outcome.curve, model).map_err(|e| ctx.fail(e))?;
                ctx.json(fit_file_name(name), &decay_json(&fit))?;
            }
        }
        Action::ThreeQubitPhaseSweep {
            input,
            subsets,
            phases_rad,
        } => {
            let sweeps = run_three_qubit_phase_sweep(&setup, *input, subsets, phases_rad)
                .map_err(|e| ctx.fail(e))?;
            for sweep in &sweeps {
                let label = sweep.label.replace('&', "-");
                ctx.curve(format!("{name}_{label}.csv"), &sweep.curve)?;
            }
        }
        Action::ThreeQubitRandom { input, p_grid, fit } => {
            let result =
                run_three_qubit_code_random(&setup, *input, p_grid).map_err(|e| ctx.fail(e))?;
            ctx.curve(format!("{name}.csv"), &result.curve)?;
            if *fit {
                let fit = fit_gamma_model(&result.curve, &GammaModelParams::reference())
                    .map_err(|e| ctx.fail(e))?;
                ctx.json(fit_file_name(name), &json!({ "fit": fit }))?;
            }
        }
    }
    Ok(ExperimentReport {
        name: experiment.name.clone(),
        outputs: ctx.outputs,
    })
}
