mod config;
mod output;
mod runner;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "flipcode",
    version,
    about = "Runs spin-qubit error-correction simulation configs and writes CSV curves, fit JSONs and a manifest"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiments described by a JSON config file
    Run {
        /// Path to the run config
        config: PathBuf,
        /// Override a config value by dotted path, e.g. --set master_seed=7
        /// or --set experiments.0.shots=500
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Write outputs here instead of the config's output_dir
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads used to sample shots
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the available experiment kinds and their options
    ListExperiments,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            set,
            out,
            jobs,
        } => run(&config, &set, out, jobs),
        Command::ListExperiments => {
            list_experiments();
            ExitCode::SUCCESS
        }
    }
}

fn list_experiments() {
    println!("{:<26}options", "kind");
    for (kind, options) in config::EXPERIMENT_KINDS {
        println!("{kind:<26}{options}");
    }
    println!();
    println!("common fields: name (required), shots (default 10000), estimator (sampled|exact)");
}

fn configure_jobs(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already initialized ({e})");
        }
    }
    #[cfg(not(feature = "parallel"))]
    if jobs.is_some() {
        eprintln!("warning: built without the parallel feature; --jobs is ignored");
    }
}

fn run(config_path: &PathBuf, sets: &[String], out: Option<PathBuf>, jobs: Option<usize>) -> ExitCode {
    configure_jobs(jobs);
    let text = match std::fs::read_to_string(config_path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config_path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut raw: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{} is not valid JSON: {e}", config_path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = config::apply_overrides(&mut raw, sets) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let parsed = match config::parse(&raw) {
        Ok(parsed) => parsed,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let config_hash = config::config_hash(&raw);
    let dir = out.unwrap_or_else(|| parsed.output_dir.clone());
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("cannot create {}: {e}", dir.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);

    let mut reports = Vec::new();
    for (index, experiment) in parsed.experiments.iter().enumerate() {
        let start = Instant::now();
        match runner::execute(experiment, index as u64, &parsed, &dir) {
            Ok(report) => {
                let wall_ms = start.elapsed().as_millis() as u64;
                println!(
                    "{}: {} ({wall_ms} ms)",
                    report.name,
                    report.outputs.join(", ")
                );
                reports.push((report, wall_ms));
            }
            Err(e) => {
                eprintln!("{e}");
                let record = json!({ "experiment": e.experiment, "error": e.message });
                if let Err(io) = output::write_json(&dir, "error.json", &record) {
                    eprintln!("cannot write error.json: {io}");
                }
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
    }

    let manifest = json!({
        "config_hash": config_hash,
        "seed": parsed.master_seed,
        "versions": {
            "flipcode": flipcode::VERSION,
            "flipcode-cli": env!("CARGO_PKG_VERSION"),
        },
        "started_at": started_at,
        "conventions": {
            "hadamard": "one -pi/2 y-axis pulse followed by a virtual-z pi frame shift",
            "code_echo": "pi y pulses on every code qubit between encode and a mirrored decode",
            "readout_projection": "data qubit is rotated back from the ideal noiseless final state before the parity readout",
        },
        "experiments": reports
            .iter()
            .map(|(r, wall_ms)| json!({
                "name": r.name,
                "outputs": r.outputs,
                "wall_ms": wall_ms,
            }))
            .collect::<Vec<_>>(),
    });
    if let Err(e) = output::write_json(&dir, "manifest.json", &manifest) {
        eprintln!("cannot write manifest.json: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    ExitCode::SUCCESS
}
