//! `ssbsync`: generate SSB captures, run the cell-search pipelines on them,
//! and benchmark scenarios.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssb_sync::harness::Pipeline;
use ssb_sync::Error;

use config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "ssbsync", version, about = "5G NR SSB timing and cell search")]
struct Cli {
    /// JSON configuration file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `bench`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a two-period capture containing one SSB.
    Generate {
        #[arg(long)]
        out: PathBuf,
        /// SSB start offset in full-rate samples.
        #[arg(long)]
        offset: Option<usize>,
        /// Physical cell ID, 0..1008.
        #[arg(long)]
        cellid: Option<u16>,
        /// Per-resource-element SNR in dB; noiseless if omitted.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
    },
    /// Run one pipeline on a capture.
    Search {
        input: PathBuf,
        #[arg(long, default_value = "proposed")]
        pipeline: Pipeline,
        /// Refinement window half-width in full-rate samples.
        #[arg(long)]
        delta_n: Option<usize>,
        /// Also write the result as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo scenario (file path or built-in name).
    Bench {
        scenario: Option<String>,
        /// Directory for curves.csv, timing.csv and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        delta_n: Option<usize>,
        /// Replace the SNR grid with a single point.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DETECTION: u8 = 4;
pub const EXIT_INTERRUPTED: u8 = 130;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } | Error::Format { .. } => EXIT_IO,
        Error::InsufficientSamples { .. } | Error::Domain(_) => EXIT_DETECTION,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut overrides = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        ..Default::default()
    };
    let result = match cli.command {
        Command::Generate { out, offset, cellid, snr } => {
            overrides.offset = offset;
            overrides.cellid = cellid;
            overrides.snr = snr;
            commands::generate(cli.config.as_deref(), &overrides, &out)
        }
        Command::Search { input, pipeline, delta_n, out } => {
            overrides.delta_n = delta_n;
            commands::search(cli.config.as_deref(), &overrides, &input, pipeline, out.as_deref())
        }
        Command::Bench { scenario, out, delta_n, snr, trials } => {
            overrides.delta_n = delta_n;
            let args = commands::BenchArgs { scenario, out, snr, trials };
            commands::bench(cli.config.as_deref(), &overrides, &args)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
