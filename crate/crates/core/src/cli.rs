//! Batch command-line front end. Each run reads one TOML config, writes
//! comma-separated series with JSON sidecars, and always leaves a
//! `manifest.json` describing the run.
//!
//! Exit codes: 0 success, 1 error, 2 when the primary diagnostic verdict
//! contradicts the config's `expectation`.

mod commands;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

pub use config::{parse_config, ConfigError, ExperimentConfig};

use crate::error::FieldError;
use crate::examples::builtin_names;
use commands::Outputs;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "STABLEFIELD_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigError>),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "stablefield", version, about = "Classify, simulate and diagnose stationary stable random fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Positive/null classification of the family's action.
    Classify { config: PathBuf },
    /// Monte Carlo sample of the field on B(T).
    Simulate { config: PathBuf },
    /// Ergodicity, mixing and association diagnostics.
    Diagnose { config: PathBuf },
    /// Built-in example families.
    #[command(subcommand)]
    Example(ExampleCommand),
    /// Bundle the series sidecars of a run directory into report.csv.
    Report { dir: PathBuf },
}

#[derive(Debug, Clone, Subcommand)]
pub enum ExampleCommand {
    /// List the built-in families.
    List,
    /// Classify and diagnose a built-in family (max-stable, alpha = 1, seed 0).
    Run {
        name: String,
        /// Output directory (default stablefield-out/<name>).
        output: Option<PathBuf>,
    },
}

/// Parses `STABLEFIELD_WORKERS`; `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn read_config(path: &Path) -> Result<(String, ExperimentConfig), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let cfg = parse_config(&text).map_err(CliError::Config)?;
    Ok((text, cfg))
}

fn example_config(name: &str) -> Result<ExperimentConfig, CliError> {
    let text = format!("seed = 0\n[family]\nexample = \"{name}\"\nalpha = 1\nkind = \"max-stable\"\n");
    parse_config(&text).map_err(CliError::Config)
}

fn write_manifest(out: &mut Outputs, command: &str, input: serde_json::Value, workers: usize, started: SystemTime, clock: Instant, code: i32) -> Result<(), CliError> {
    let started_ms = started.duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let mut files = out.files.clone();
    files.sort();
    let manifest = json!({
        "command": command,
        "input": input,
        "versions": {"stablefield": env!("CARGO_PKG_VERSION")},
        "workers": workers,
        "started_unix_ms": started_ms,
        "wall_seconds": clock.elapsed().as_secs_f64(),
        "exit_code": code,
        "outputs": files,
    });
    out.json("manifest.json", &manifest)
}

fn execute(command: &Command, workers: usize) -> Result<i32, CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    match command {
        Command::Classify { config } | Command::Simulate { config } | Command::Diagnose { config } => {
            let (text, cfg) = read_config(config)?;
            let mut out = Outputs::new(Path::new(&cfg.output))?;
            let (name, result) = match command {
                Command::Classify { .. } => ("classify", commands::run_classify(&cfg, &mut out)),
                Command::Simulate { .. } => ("simulate", commands::run_simulate(&cfg, &mut out)),
                _ => ("diagnose", commands::run_diagnose(&cfg, &mut out)),
            };
            let code = match &result {
                Ok(c) => *c,
                Err(_) => 1,
            };
            let input = json!({"config_path": config.display().to_string(), "config": text, "seed": cfg.seed});
            write_manifest(&mut out, name, input, workers, started, clock, code)?;
            result
        }
        Command::Example(ExampleCommand::List) => {
            for (name, description) in builtin_names() {
                println!("{name:<22} {description}");
            }
            Ok(0)
        }
        Command::Example(ExampleCommand::Run { name, output }) => {
            let cfg = example_config(name)?;
            let dir = output.clone().unwrap_or_else(|| Path::new("stablefield-out").join(name));
            let mut out = Outputs::new(&dir)?;
            let result = commands::run_classify(&cfg, &mut out).and_then(|_| commands::run_diagnose(&cfg, &mut out));
            let code = result.as_ref().map_or(1, |c| *c);
            write_manifest(&mut out, "example run", json!({"example": name, "seed": cfg.seed}), workers, started, clock, code)?;
            result
        }
        Command::Report { dir } => {
            let mut out = Outputs::new(dir)?;
            commands::run_report(dir, &mut out)
        }
    }
}

/// Runs `command` on a dedicated pool of `workers` threads (all available
/// cores when `None`). Outputs do not depend on the worker count.
pub fn run(command: &Command, workers: Option<usize>) -> Result<i32, CliError> {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
    pool.install(|| execute(command, n))
}

/// Entry point of the binary: parses arguments, runs, and maps errors to
/// exit code 1.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let result = workers_from_env().and_then(|w| run(&cli.command, w));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
