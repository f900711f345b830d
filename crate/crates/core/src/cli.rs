//! Command-line front end.
//!
//! Every subcommand reads one TOML run config, writes `report.json`,
//! `config.toml` (the resolved config) and a set of CSV tables into the
//! output directory, and exits with one of the `EXIT_*` codes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

mod commands;
mod config;
mod report;

pub use commands::{cmd_calibrate, cmd_demo_paths, cmd_design, cmd_evaluate, cmd_misid_sweep, DesignPoint};
pub use config::{
    DemoSection, DesignSection, GridSection, McSection, OutputSection, ProcedureSection, RunConfig, SelectionMode,
};
pub use report::{CsvTable, Report, Status, Toolkit, SCHEMA_VERSION};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_UNRELIABLE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "seqdiag", version, about = "Sequential change detection and isolation toolkit")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides `mc.base_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores); overrides `mc.workers`.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Print the resolved config with every default filled in. Without
    /// `--config`, prints a complete example.
    #[arg(long)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Single-CuSum thresholds b_i(α) and optimal delays L_i(α).
    Calibrate,
    /// Feasible threshold regions and selected (b, h) per variant and r.
    Design,
    /// False-alarm, delay and misidentification estimates at explicit (b, h).
    Evaluate,
    /// Worst-case misidentification per change point and per r.
    MisidSweep,
    /// Single-path statistic traces and partial sums.
    DemoPaths,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Calibrate => "calibrate",
            Command::Design => "design",
            Command::Evaluate => "evaluate",
            Command::MisidSweep => "misid-sweep",
            Command::DemoPaths => "demo-paths",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        [
            Command::Calibrate,
            Command::Design,
            Command::Evaluate,
            Command::MisidSweep,
            Command::DemoPaths,
        ]
        .into_iter()
        .find(|c| c.name() == name)
        .ok_or_else(|| Error::Config(format!("unknown command `{name}`")))
    }

    /// Runs the command on a resolved config.
    pub fn run(self, cfg: &RunConfig) -> Result<Report> {
        match self {
            Command::Calibrate => cmd_calibrate(cfg),
            Command::Design => cmd_design(cfg),
            Command::Evaluate => cmd_evaluate(cfg),
            Command::MisidSweep => cmd_misid_sweep(cfg),
            Command::DemoPaths => cmd_demo_paths(cfg),
        }
    }
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        if self.status.infeasible {
            EXIT_INFEASIBLE
        } else if self.status.unreliable {
            EXIT_UNRELIABLE
        } else {
            EXIT_OK
        }
    }
}

/// Exit code for an error that aborted a run.
pub fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::InvalidModel(_)
        | Error::Unsupported(_)
        | Error::ModelSupport { .. } => EXIT_VALIDATION,
        Error::GridExhausted { .. } => EXIT_INFEASIBLE,
        _ => EXIT_FAILURE,
    }
}

fn execute(cli: &Cli) -> Result<u8> {
    let raw = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None if cli.print_config => RunConfig::example(),
        None => return Err(Error::Config("no --config given".into())),
    };
    let mut cfg = raw.resolve(cli.seed)?;
    if let Some(w) = cli.workers {
        cfg.mc.get_or_insert_with(McSection::default).workers = w;
    }
    if cli.print_config {
        print!("{}", cfg.to_toml_string()?);
        if cli.command.is_none() {
            return Ok(EXIT_OK);
        }
    }
    let command = cli
        .command
        .ok_or_else(|| Error::Config("no subcommand given (see --help)".into()))?;
    let report = command.run(&cfg)?;
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    report.write_to(&dir)?;
    log::info!("{} report written to {}", command.name(), dir.display());
    if report.status.infeasible {
        log::warn!("some designs have an empty feasible set");
    }
    if report.status.unreliable {
        log::warn!("some estimates are flagged unreliable");
    }
    Ok(report.exit_code())
}

/// Entry point used by the binary.
pub fn run(cli: &Cli) -> ExitCode {
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}
