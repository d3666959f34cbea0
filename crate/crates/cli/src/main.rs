//! `fricest`: simulate stick-slip traces, estimate friction and contact
//! radius from them, tabulate batches and sweep limit surfaces.
//!
//! Exit codes: 0 on success, 1 on data or runtime errors, 2 on usage or
//! configuration errors.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fricest", version, about = "In-hand friction estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate force and velocity traces for a scenario.
    Simulate(commands::SimulateArgs),
    /// Run the online estimator over recorded traces.
    Estimate(commands::EstimateArgs),
    /// Aggregate estimate files into a per-condition table.
    Report(commands::ReportArgs),
    /// Export a normalized limit-surface sweep for a pressure distribution.
    LimitSurface(commands::LimitSurfaceArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Estimate(args) => commands::estimate(args),
        Command::Report(args) => commands::report(args),
        Command::LimitSurface(args) => commands::limit_surface(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.exit_code())
        }
    }
}
