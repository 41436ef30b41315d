//! Command-line front end for the `ris-sim` binary.
//!
//! Exit codes: 0 success, 1 invalid arguments, 2 configuration error,
//! 3 runtime failure. Failures print one line to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::harness::{self, ExperimentResult};
use crate::scenario::ScenarioConfig;

/// Environment variable that sets the number of worker threads.
pub const WORKERS_ENV: &str = "RIS_SIM_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ris-sim", version, about = "RIS-assisted downlink resource allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-user SNR experiment
    Su(RunArgs),
    /// Multiuser geometric-mean SINR experiment
    Mu(RunArgs),
    /// Load the configuration and print it with defaults filled in
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML scenario file; defaults are used for missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
struct Record<'a> {
    method: &'a str,
    trial: usize,
    metric_db: f64,
}

fn records(result: &ExperimentResult) -> Vec<Record<'_>> {
    let mut out: Vec<Record<'_>> = result
        .trials
        .iter()
        .map(|t| Record {
            method: t.method.label(),
            trial: t.trial_index,
            metric_db: t.metric_db,
        })
        .collect();
    out.sort_by(|a, b| a.method.cmp(b.method).then(a.trial.cmp(&b.trial)));
    out
}

/// Serializes the per-trial metrics, sorted by `(method, trial)`.
pub fn render(result: &ExperimentResult, format: Format) -> Result<Vec<u8>, Error> {
    let recs = records(result);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &recs {
                w.serialize(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))
        }
        Format::Json => {
            let mut buf = serde_json::to_vec_pretty(&recs)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            buf.push(b'\n');
            Ok(buf)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, Error> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => std::io::stdout().lock().write_all(bytes),
    }
}

fn worker_pool() -> Result<rayon::ThreadPool, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| e.to_string())
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("ris-sim: {msg}");
    code
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    let text = e.to_string();
                    let line = text.lines().next().unwrap_or("invalid arguments");
                    fail(EXIT_USAGE, line.trim_start_matches("error: "))
                }
            };
        }
    };

    let (args, single_user) = match cli.command {
        Command::Validate { config } => {
            return match load_config(config.as_deref()) {
                Ok(cfg) => match write_output(None, cfg.to_toml_string().as_bytes()) {
                    Ok(()) => EXIT_OK,
                    Err(e) => fail(EXIT_RUNTIME, e),
                },
                Err(e) => fail(EXIT_CONFIG, e),
            };
        }
        Command::Su(a) => (a, true),
        Command::Mu(a) => (a, false),
    };

    let cfg = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let pool = match worker_pool() {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let n_trials = match args.trials {
        Some(n) => n as usize,
        None if single_user => harness::DEFAULT_SU_TRIALS,
        None => harness::DEFAULT_MU_TRIALS,
    };
    let result = pool.install(|| {
        if single_user {
            harness::run_single_user(&cfg, n_trials, args.seed)
        } else {
            harness::run_multi_user(&cfg, n_trials, args.seed)
        }
    });
    let bytes = match result.and_then(|r| render(&r, args.format)) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    match write_output(args.out.as_deref(), &bytes) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(EXIT_RUNTIME, format!("cannot write output: {e}")),
    }
}
