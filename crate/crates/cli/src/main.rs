use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;

use config::ProblemConfig;
use error::CliError;

/// Bloch spectra and Bloch functions for periodic operators with
/// half-space Fourier potentials.
#[derive(Debug, Parser)]
#[command(name = "halfspace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON problem description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Decide whether the potential lies in a half-lattice.
    Classify,
    /// Bloch coefficients by series and closed form.
    Bloch,
    /// Compare against a truncated Galerkin operator.
    Oracle,
    /// Multiplicity and root-function analysis.
    Multiplicity,
    /// Sample the isoenergetic surface on a grid of quasimomenta.
    Fermi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn run(cli: &Cli) -> Result<Option<CliError>, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Parse {
        field: "--config".into(),
        message: "a configuration file is required".into(),
    })?;
    let cfg = ProblemConfig::from_path(path)?;
    let report = match cli.command {
        Command::Classify => commands::classify(&cfg)?,
        Command::Bloch => commands::bloch(&cfg)?,
        Command::Oracle => commands::oracle(&cfg)?,
        Command::Multiplicity => commands::multiplicity(&cfg)?,
        Command::Fermi => commands::fermi(&cfg)?,
    };
    let default = if matches!(cli.command, Command::Fermi) { Format::Csv } else { Format::Json };
    let text = match cli.format.unwrap_or(default) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => report
            .csv
            .clone()
            .unwrap_or_else(|| commands::flatten_csv(&report.json)),
    };
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })?,
        None => print!("{text}"),
    }
    Ok(report.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let failure = match run(&cli) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(f)) => f,
        Err(e) => e,
    };
    eprintln!("error: {failure}");
    ExitCode::from(failure.exit_code())
}
