//! `delta-spec`: self-adjointness and deficiency analysis from the command line.

mod analyze;
mod case;
mod config;
mod model;
mod plot;
mod sweep;
mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::UsageError;

#[derive(Parser, Debug)]
#[command(
    name = "delta-spec",
    version,
    about = "Self-adjointness and deficiency indices of Jacobi matrices from δ-interactions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every test on one (grid, alpha) pair and write a JSON report.
    Analyze(analyze::AnalyzeArgs),
    /// Tabulate verdicts over a (gamma, eta, a) grid as CSV.
    Sweep(sweep::SweepArgs),
    /// Run the reference check battery; exits nonzero if any check fails.
    VerifyPaper(verify::VerifyArgs),
    /// Emit a log-subsampled (n, value) CSV series.
    PlotData(plot::PlotArgs),
}

/// Writes to `path`, or to stdout when `path` is absent or `-`.
pub(crate) fn write_output<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) if p != Path::new("-") => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            f(&mut w)
                .and_then(|_| w.flush())
                .with_context(|| format!("cannot write {}", p.display()))
        }
        _ => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            f(&mut w)
                .and_then(|_| w.flush())
                .context("cannot write to stdout")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze(a) => analyze::run(a).map(|_| true),
        Command::Sweep(a) => sweep::run(a).map(|_| true),
        Command::VerifyPaper(a) => verify::run(a),
        Command::PlotData(a) => plot::run(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
