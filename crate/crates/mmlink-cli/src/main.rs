//! Experiment harness for the mmlink directional-link model.
//!
//! Reads a strict JSON configuration (or built-in defaults), runs one of
//! the analysis subcommands or a canned preset, and writes CSV/JSON files
//! carrying a provenance header with the full resolved configuration.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible or failed
//! search region, 4 I/O error.

mod commands;
mod config;
mod output;
mod presets;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use config::{ConfigError, OutputFormat, RawConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::Infeasible(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "error: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<mmlink::Error> for CliError {
    fn from(e: mmlink::Error) -> Self {
        match e {
            mmlink::Error::Infeasible(_) | mmlink::Error::NonConvergence { .. } => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "mmlink", version, about = "Directional mmWave link experiments")]
struct Cli {
    /// JSON experiment configuration; omitted fields use built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for tabular results.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate antenna gain over pointing angle for each configured beamwidth.
    GainCurve,
    /// Aligned and worst-case capacity over the beamwidth plane.
    CapacitySurface,
    /// Capacity-maximizing beamwidths for each misalignment bound.
    Optimize,
    /// Closed-form expected capacity next to its Monte Carlo estimate.
    ExpectedCapacity,
    /// Slot-by-slot beam-widening simulation with a static baseline.
    AdaptSim,
    /// Run a canned experiment with pinned settings.
    Preset {
        #[arg(value_enum)]
        name: presets::Preset,
    },
}

fn real_main() -> Result<(), CliError> {
    let cli = Cli::parse();

    let raw = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    let mut cfg = raw.resolve()?;

    if let Command::Preset { name } = &cli.command {
        presets::apply(*name, &mut cfg);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if let Some(format) = cli.format {
        cfg.output.format = match format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }

    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;

    let written = match &cli.command {
        Command::GainCurve => commands::gain_curve(&cfg, &dir)?,
        Command::CapacitySurface => commands::capacity_surface(&cfg, &dir)?,
        Command::Optimize => commands::optimize(&cfg, &dir)?,
        Command::ExpectedCapacity => commands::expected_capacity_cmd(&cfg, &dir)?,
        Command::AdaptSim => commands::adapt_sim(&cfg, &dir)?,
        Command::Preset { name } => presets::run(*name, &cfg, &dir)?,
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
