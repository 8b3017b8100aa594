//! Command-line interface for the nanofiber-cavity toolkit.

mod commands;
mod config;
mod errors;
mod formats;
mod report;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nfcav",
    version,
    about = "Photonic-crystal nanofiber cavity simulation and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate transmission/reflection spectra from a geometry file
    Simulate(commands::simulate::SimulateArgs),
    /// Detect and fit cavity modes, estimate FSR/finesse and the loss budget
    Analyze(commands::analyze::AnalyzeArgs),
    /// Fit the intra-cavity loss rate to a (kappa, T0, R0) table
    Fitloss(commands::fitloss::FitlossArgs),
    /// Cavity-QED figures of merit for a finesse list or an analysis report
    Qed(commands::qed::QedArgs),
    /// Print the tool version
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Analyze(args) => commands::analyze::run(args),
        Command::Fitloss(args) => commands::fitloss::run(args),
        Command::Qed(args) => commands::qed::run(args),
        Command::Version => {
            println!("nfcav {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
