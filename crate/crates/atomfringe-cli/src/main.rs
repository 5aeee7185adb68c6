//! Command-line front end: emits reproducible CSV/JSON datasets for spectra,
//! visibility, the deviation scan, the visibility-entanglement bound bands,
//! tomography pipelines and Monte Carlo photon runs.
//!
//! Every emitted CSV starts with a `# config=<hash>` comment so outputs can
//! be traced back to the exact invocation; identical configuration and seed
//! produce byte-identical files.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "atomfringe", version, about = "Fringe patterns, visibility and entanglement for pinned two-level atoms")]
struct Cli {
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Format for summary records (grids are always CSV): csv | json.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emission spectrum of a two- or three-atom state, with a plot script.
    Spectrum(commands::SpectrumArgs),
    /// Fringe visibility of a state (closed form plus brute-force check).
    Visibility(commands::VisibilityArgs),
    /// Max |V - C| over state angles against separation (two atoms).
    DeviationScan(commands::DeviationScanArgs),
    /// Entanglement-measure bands against visibility, with sampled scatter.
    Bounds(commands::BoundsArgs),
    /// State reconstruction from fringe samples (measured or simulated).
    Tomography(commands::TomographyArgs),
    /// Monte Carlo photon sampling, fringe histogram and visibility estimate.
    Simulate(commands::SimulateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match commands::OutputFormat::parse(&cli.format) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Spectrum(a) => commands::run_spectrum(&cli.out, a),
        Command::Visibility(a) => commands::run_visibility(&cli.out, &format, a),
        Command::DeviationScan(a) => commands::run_deviation_scan(&cli.out, a),
        Command::Bounds(a) => commands::run_bounds(&cli.out, a),
        Command::Tomography(a) => commands::run_tomography(&cli.out, &format, a),
        Command::Simulate(a) => commands::run_simulate(&cli.out, &format, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
