//! Scenario runner for the deformed damped-oscillator toolkit.
//!
//! `defosc <mode> --config <path>` reads a flat key-value (or JSON) scenario
//! file, runs one of spectrum / evolve / steady / thermo / sweep, and emits
//! a deterministic CSV or JSON table. Exit codes: 0 on success, 2 for
//! configuration errors (stderr carries a JSON record naming the field),
//! 3 for numerical failures.

mod config;
mod error;
mod scenario;
mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Subcmd;
use crate::error::{CliError, CliResult};
use crate::table::Format;

#[derive(Parser)]
#[command(
    name = "defosc",
    version,
    about = "Deformed damped-oscillator toolkit: spectra, dissipative dynamics, steady states, thermodynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Level energies and effective spacings of the deformed oscillator
    Spectrum(RunArgs),
    /// Integrate the dissipative master equation and record observables
    Evolve(RunArgs),
    /// Stationary populations via two independent routes
    Steady(RunArgs),
    /// Partition function and equilibrium energy, with small-tau expansions
    Thermo(RunArgs),
    /// Run the base mode once per swept parameter value
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file: `key = value` lines with dotted keys, or a JSON object
    #[arg(long)]
    config: PathBuf,
    /// Write output here (overrides output.path; default stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (overrides output.format)
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads for sweeps
    #[arg(long, env = "DEFOSC_JOBS")]
    jobs: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let (sub, args) = match cli.command {
        Command::Spectrum(a) => (Subcmd::Spectrum, a),
        Command::Evolve(a) => (Subcmd::Evolve, a),
        Command::Steady(a) => (Subcmd::Steady, a),
        Command::Thermo(a) => (Subcmd::Thermo, a),
        Command::Sweep(a) => (Subcmd::Sweep, a),
    };
    if let Err(err) = run(sub, args) {
        eprintln!("{}", err.record());
        std::process::exit(err.exit_code());
    }
}

fn run(sub: Subcmd, args: RunArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(format!("cannot read config {}: {e}", args.config.display())))?;
    let bag = config::parse_raw(&text)?;
    let mut sc = config::build_scenario(sub, bag)?;

    if let Some(format) = args.format.as_deref() {
        sc.format = Format::parse(format).map_err(|m| CliError::config("--format", m))?;
    }
    if let Some(out) = args.out {
        sc.out_path = Some(out);
    }
    let jobs = match args.jobs {
        Some(0) => return Err(CliError::config("--jobs", "must be >= 1")),
        Some(n) => n,
        None => 1,
    };

    if sub == Subcmd::Sweep {
        let outcome = scenario::run_sweep(&sc, jobs);
        let marker = outcome.failure.as_ref().map(|f| {
            let mut record = f.error.record();
            record["value_index"] = serde_json::Value::from(f.index);
            record["value"] = serde_json::Number::from_f64(f.value)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null);
            record
        });
        let rendered = outcome.table.render(sc.format, marker.as_ref());
        table::write_output(&rendered, sc.out_path.as_deref())?;
        if let Some(failure) = outcome.failure {
            return Err(failure.error);
        }
    } else {
        let result = scenario::run_mode(&sc)?;
        let rendered = result.render(sc.format, None);
        table::write_output(&rendered, sc.out_path.as_deref())?;
    }
    Ok(())
}
