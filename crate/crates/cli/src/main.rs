//! `cogsa`: run GSA/COGSA experiments, sweep dimensions, compare algorithms
//! statistically and export convergence traces.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, TraceOptions};
use config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "cogsa", version, about = "GSA and COGSA experiment runner")]
struct Cli {
    /// Experiment configuration file (run, scale).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for independent runs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory for run and scale; output file for compare, trace and verify.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// 51 runs, T = 6000, chaotic exponent scaled by 1/3, fitness-error statistics.
    #[arg(long = "testbed2-style", global = true)]
    testbed2_style: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run every configured algorithm on every configured benchmark.
    Run,
    /// Sweep scalable benchmarks over the configured dimensions.
    Scale,
    /// Friedman post-hoc p-values of every algorithm against a reference.
    Compare {
        /// Report files written by `run` or `scale`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "cogsa")]
        reference: String,
        /// Significance level for highlighting.
        #[arg(long, default_value_t = cogsa_core::stats::DEFAULT_LEVEL)]
        level: f64,
    },
    /// Convert run records (files or directories) to long-format plot data.
    Trace {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Write log10 of the best-so-far value.
        #[arg(long)]
        log10: bool,
        /// Values below this are raised to it before taking log10.
        #[arg(long, default_value_t = 1e-300)]
        floor: f64,
        /// Keep every k-th iteration (plus the first and last).
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// Check every testbed function at its known optimizer.
    Verify,
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    builder
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker threads: {e}")))
}

fn experiment(cli: &Cli) -> Result<config::ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --config <FILE>".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        output: cli.out.clone(),
        testbed2_style: cli.testbed2_style,
    };
    Ok(config::load(path, &overrides)?)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Cmd::Run => {
            let cfg = experiment(cli)?;
            commands::run(&cfg, &thread_pool(cli.jobs)?)
        }
        Cmd::Scale => {
            let cfg = experiment(cli)?;
            commands::scale(&cfg, &thread_pool(cli.jobs)?)
        }
        Cmd::Compare {
            reports,
            reference,
            level,
        } => commands::compare(reports, reference, *level, cli.out.as_deref()),
        Cmd::Trace {
            records,
            log10,
            floor,
            every,
        } => commands::trace(
            records,
            &TraceOptions {
                log10: *log10,
                floor: *floor,
                every: *every,
            },
            cli.out.as_deref(),
        ),
        Cmd::Verify => commands::verify(cli.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
