//! `sdde`: command-line driver for the delay-equation pipeline.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sdde_core::ErrorKind;

#[derive(Debug, Parser)]
#[command(
    name = "sdde",
    version,
    about = "Simulate, lift and complex-extend state-dependent delay equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration (flat keys; unknown keys are errors).
    #[arg(long, global = true, env = "SDDE_CONFIG")]
    pub config: Option<PathBuf>,

    /// Built-in model name (example41, toy-scalar) or a TOML parameter file.
    #[arg(long, global = true, env = "SDDE_MODEL", default_value = "example41")]
    pub model: String,

    /// Output directory for the manifest and stage artifacts.
    #[arg(long, global = true, env = "SDDE_OUT", default_value = "sdde-out")]
    pub out: PathBuf,

    /// Seed for every randomised estimate; overrides the config file.
    #[arg(long, global = true, env = "SDDE_SEED")]
    pub seed: Option<u64>,

    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, env = "SDDE_WORKERS")]
    pub workers: Option<usize>,

    /// Artifact formats.
    #[arg(
        long,
        global = true,
        env = "SDDE_FORMAT",
        value_delimiter = ',',
        default_value = "json,csv"
    )]
    pub format: Vec<Format>,

    /// Config override `KEY=VALUE`, applied after the config file. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_kv)]
    pub set: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Integrate the delay equation from the model's history.
    Simulate,
    /// Integrate, then build the sequence-space lift at the lift time.
    Lift,
    /// Check the disk condition (and, for example41, the alpha conditions).
    VerifyAssumptions,
    /// Disk condition gate, then λ-continuation on a complex disk and Taylor diagnostics.
    ComplexExtend,
    /// The full example41 pipeline.
    Example41,
    /// Summarise the artifacts of an earlier run.
    Report {
        /// Directory holding `manifest.json`; defaults to `--out`.
        dir: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Lift => "lift",
            Command::VerifyAssumptions => "verify-assumptions",
            Command::ComplexExtend => "complex-extend",
            Command::Example41 => "example41",
            Command::Report { .. } => "report",
        }
    }
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err("empty key".into());
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// A failure with its exit code: 1 assumption, 2 numerical, 3 usage.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const ASSUMPTION: u8 = 1;
    pub const NUMERICAL: u8 = 2;
    pub const USAGE: u8 = 3;

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: Self::USAGE,
            message: message.into(),
        }
    }

    pub fn assumption(message: impl Into<String>) -> Self {
        Self {
            code: Self::ASSUMPTION,
            message: message.into(),
        }
    }
}

impl From<sdde_core::Error> for CliError {
    fn from(e: sdde_core::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Assumption => Self::ASSUMPTION,
            ErrorKind::Numerical => Self::NUMERICAL,
            ErrorKind::Usage => Self::USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let code = commands::run(&cli);
    ExitCode::from(code)
}
