//! `fanoscat`: phase shifts, sector curves, Fano decompositions, fits and detector simulations
//! driven by one JSON run configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "fanoscat",
    version,
    about = "Fano line shapes in angle-resolved elastic scattering"
)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase-shift table and resonance report.
    Phaseshifts,
    /// k²-scaled sector curves over the reduced-energy window.
    Sectors,
    /// Fano parameters and constant-background model curves per sector.
    Fano,
    /// Fit the sector model to curve files.
    Fit {
        #[arg(required = true)]
        data: Vec<PathBuf>,
    },
    /// Detector simulation, transfer function and corrected curves.
    Simulate,
    /// SVG line plot of one or more curve files.
    Plot {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        /// Interpolate every curve onto the first curve's abscissa.
        #[arg(long)]
        resample: bool,
        /// File name inside the output directory.
        #[arg(long, default_value = "plot.svg")]
        name: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Validation,
    Runtime,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Failure,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: Failure::Validation,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            kind: Failure::Runtime,
            message: message.into(),
        }
    }

    pub fn from_core_validation(e: fanoscat_core::Error) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<fanoscat_core::Error> for CliError {
    fn from(e: fanoscat_core::Error) -> Self {
        Self::runtime(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            Failure::Validation => "invalid input",
            Failure::Runtime => "error",
        };
        write!(f, "{kind}: {}", self.message)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Plot {
        curves,
        resample,
        name,
    } = &cli.command
    {
        let cfg = match &cli.config {
            Some(p) => Some(config::RunConfig::load(p)?),
            None => None,
        };
        let out = cli
            .out
            .clone()
            .or_else(|| cfg.as_ref().and_then(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("fanoscat_out"));
        return plot::run(
            curves,
            *resample,
            &out,
            name,
            cfg.as_ref().map(|c| c.hash()),
        );
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::validation("--config is required for this command"))?;
    let mut cfg = config::RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("fanoscat_out"));
    let ctx = commands::Context::new(cfg, out)?;
    match cli.command {
        Command::Phaseshifts => commands::phaseshifts(&ctx),
        Command::Sectors => commands::sectors(&ctx),
        Command::Fano => commands::fano(&ctx),
        Command::Fit { data } => commands::fit(&ctx, &data),
        Command::Simulate => commands::simulate(&ctx),
        Command::Plot { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fanoscat: {e}");
            ExitCode::from(match e.kind {
                Failure::Validation => 2,
                Failure::Runtime => 1,
            })
        }
    }
}
