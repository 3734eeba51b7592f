//! `threatsent`: one entry point for every pipeline stage.
//!
//! Exit status is 0 on success, 1 when input data or a provider fails and 2
//! on usage errors.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::Overrides;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

pub(crate) fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "threatsent", version, about = "Insider-threat sentiment pipeline")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keep reviews whose text mentions a threat keyword stem
    Filter {
        /// Comma-separated lowercase stems replacing the default list
        #[arg(long, value_delimiter = ',')]
        stems: Option<Vec<String>>,
        /// Map a standard column to the input's header, e.g. `pros=Pros`
        #[arg(long = "column", value_parser = parse_mapping)]
        columns: Vec<(String, String)>,
    },
    /// Draw a Cochran-sized seeded random sample
    Sample {
        /// Population size for the Cochran formula; defaults to the input size
        #[arg(long)]
        population: Option<u64>,
        #[arg(long, default_value_t = 1.96)]
        z: f64,
        #[arg(long, default_value_t = 0.5)]
        proportion: f64,
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
        /// Skip the formula and draw exactly this many
        #[arg(long)]
        size: Option<usize>,
    },
    /// Generate synthetic reviews over the configured schedule
    Synth {
        /// Per-item generation log (JSONL)
        #[arg(long)]
        log: Option<std::path::PathBuf>,
        /// Full prompt/response transcript (JSONL)
        #[arg(long)]
        transcript: Option<std::path::PathBuf>,
    },
    /// Score every review with the analysis prompt
    Score {
        #[arg(long)]
        log: Option<std::path::PathBuf>,
        #[arg(long)]
        transcript: Option<std::path::PathBuf>,
    },
    /// Compute CR, CR-POS and NDS for a corpus
    Diversity {
        /// Dataset label; defaults to the input file stem
        #[arg(long)]
        label: Option<String>,
    },
    /// Compare reference and model scores
    Align {
        /// Model label; defaults to the scores file stem
        #[arg(long)]
        label: Option<String>,
        /// Where to write the disagreement list
        #[arg(long)]
        disagreements: Option<std::path::PathBuf>,
    },
    /// Run the blind annotation service
    AnnotateServe {
        /// Directory holding the session logs
        #[arg(long, default_value = "annotation-store")]
        store: std::path::PathBuf,
        /// Static UI bundle served at `/`
        #[arg(long)]
        ui_dir: Option<std::path::PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Collect stage outputs into the summary tables
    Report {
        /// Output of `diversity`; repeatable
        #[arg(long)]
        diversity: Vec<std::path::PathBuf>,
        /// Output of `align`; repeatable
        #[arg(long)]
        alignment: Vec<std::path::PathBuf>,
    },
}

fn parse_mapping(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected STANDARD=HEADER, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(tracing_subscriber::filter::LevelFilter::WARN)
        .init();
    match commands::run(&cli.overrides, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("threatsent: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
