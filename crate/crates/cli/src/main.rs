//! `plantpulse`: serve the API, run deterministic headless simulations and
//! execute one-shot queries.

mod query;
mod run;
mod serve;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plantpulse_core::sim::ClockMode;

#[derive(Debug, Parser)]
#[command(name = "plantpulse", version, about = "Simulated Industry 4.0 plant with live analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve the HTTP API, metrics stream and UI assets.
    Serve(ServeArgs),
    /// Run a headless stepped simulation and export every table as CSV.
    Run(RunArgs),
    /// Execute one query against a server or an export directory.
    Query(QueryArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PLANTPULSE_PORT", default_value_t = 8080, value_parser = clap::value_parser!(u16).range(1..))]
    pub port: u16,
    /// Interface to bind.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Virtual milliseconds per wall millisecond.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub scale: f64,
    #[arg(long, default_value = "realtime", value_parser = parse_clock)]
    pub clock: ClockMode,
    /// Sensor configuration document replacing the shipped default.
    #[arg(long, value_name = "PATH")]
    pub sensor_config: Option<PathBuf>,
    /// Master data document replacing the preconfigured factory.
    #[arg(long, value_name = "PATH")]
    pub master_data: Option<PathBuf>,
    /// Stop ingesting once the store holds this many rows.
    #[arg(long, value_name = "N")]
    pub max_rows: Option<u64>,
    /// Directory of built UI assets to serve under `/`.
    #[arg(long, value_name = "PATH")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Virtual seconds to simulate.
    #[arg(long, value_name = "SECONDS", value_parser = clap::value_parser!(u64).range(1..))]
    pub duration: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub export_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["url", "export_dir"]))]
#[command(group = clap::ArgGroup::new("text").required(true).args(["sql", "file"]))]
pub struct QueryArgs {
    /// Base URL of a running server, e.g. http://127.0.0.1:8080.
    #[arg(long)]
    pub url: Option<String>,
    /// Directory written by `run --export-dir`.
    #[arg(long, value_name = "PATH")]
    pub export_dir: Option<PathBuf>,
    /// Print RFC 4180 CSV instead of an aligned table.
    #[arg(long)]
    pub csv: bool,
    /// Read the query from a file.
    #[arg(long, value_name = "PATH")]
    pub file: Option<PathBuf>,
    pub sql: Option<String>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_clock(s: &str) -> Result<ClockMode, String> {
    s.parse()
}

/// Failure reported to the user; the variant selects the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Input(String),
    /// Environment or I/O failure: exit code 1.
    Operational(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Operational(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Operational(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    let result = match cli.command {
        Command::Serve(args) => serve::serve(args),
        Command::Run(args) => run::run(args),
        Command::Query(args) => query::query(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
