#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::Failure;
use output::OutputDir;

/// Schrödinger-problem experiments on a grid.
///
/// Exit status: 0 when every asserted check passes, 2 for configuration
/// errors, 3 for solver failures, 4 when a check or tolerance fails.
#[derive(Parser)]
#[command(name = "schrodinger-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Static and dynamic costs plus the identity residual.
    Cost(Args),
    /// Entropy, Fisher information and kinetic energy along the interpolation.
    Interpolate(Args),
    /// Analytic versus finite-difference derivatives of the costs along curves.
    Derivative(Args),
    /// Cost convergence under truncation of the marginals.
    Continuity(Args),
    /// Cost decay along the heat flow.
    Contraction(Args),
    /// Talagrand-type bounds over a set of horizons.
    Talagrand(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing. Overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (&'static str, Args) {
        match self {
            Command::Cost(a) => ("cost", a),
            Command::Interpolate(a) => ("interpolate", a),
            Command::Derivative(a) => ("derivative", a),
            Command::Continuity(a) => ("continuity", a),
            Command::Contraction(a) => ("contraction", a),
            Command::Talagrand(a) => ("talagrand", a),
        }
    }
}

fn execute(name: &'static str, args: Args) -> Result<(), Failure> {
    let setup = config::load(&args.config, name).map_err(Failure::Config)?;
    let root = args.out.or_else(|| setup.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut out = OutputDir::create(&root)?;
    let checks = commands::run(&setup, &mut out)?;
    for path in out.written() {
        println!("wrote {}", path.display());
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} (value {:e}, threshold {:e})", c.name, c.value, c.threshold))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Tolerance(failed.join("; ")))
    }
}

fn main() -> ExitCode {
    let (name, args) = Cli::parse().command.split();
    match execute(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("schrodinger-lab {name}: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
