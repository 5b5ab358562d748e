//! `uemr` command-line front end: ingest, tag, analyse, report, synthesise.
//!
//! Exit codes: 0 success, 1 usage, 2 input error, 3 analysis error.

mod commands;
mod envelope;
mod report;
mod tables;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use uemr::config::RunConfig;

#[derive(Parser)]
#[command(name = "uemr", version, about = "Satellite unintended-emission catalogue analysis")]
struct Cli {
    /// TOML run configuration; defaults are used for anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and classify the detection catalogue, apply quality cuts and
    /// write the canonical catalogue.
    Ingest {
        #[arg(long)]
        detections: Option<PathBuf>,
        #[arg(long)]
        bus_table: Option<PathBuf>,
    },
    /// Attach illumination state to every detection of the canonical catalogue.
    Tag,
    /// Run one analysis, or all of them.
    Analyze {
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
    },
    /// Render report.md from stored analysis results.
    Report,
    /// Generate a synthetic catalogue with known ground truth.
    Synth {
        /// Generator specification (TOML); defaults when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Excess,
    Polarisation,
    Fine,
    Control,
    T1,
    T2,
    T3,
    Eclipse,
    Thermal,
    Dynamic,
    All,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl fmt::Display) -> Self {
        CliError { code: 1, message: m.to_string() }
    }
    pub fn input(m: impl fmt::Display) -> Self {
        CliError { code: 2, message: m.to_string() }
    }
    pub fn analysis(m: impl fmt::Display) -> Self {
        CliError { code: 3, message: m.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

fn context(cli: &Cli) -> CliResult<Ctx> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(CliError::input)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.stats.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.paths.output_dir = o.clone();
    }
    let out = cfg.paths.output_dir.clone();
    Ok(Ctx { cfg, out })
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = context(&cli)?;
    match cli.command {
        Command::Ingest { detections, bus_table } => commands::ingest(&ctx, detections, bus_table),
        Command::Tag => commands::tag(&ctx),
        Command::Analyze { which } => commands::analyze(&ctx, which),
        Command::Report => report::render(&ctx),
        Command::Synth { spec } => commands::synth(&ctx, spec.as_deref(), cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    // explicit level only; the environment is never read
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
