//! `dacs`: generate datasets, run selection rounds, and produce bound,
//! calibration and comparison reports from a JSON experiment config.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 success
//! with warnings.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dacs_core::data::Metric;

use crate::config::{DatasetSource, ExperimentConfig, Overrides};
use crate::error::CliError;
use crate::report::{Metadata, Output};

#[derive(Parser, Debug)]
#[command(name = "dacs", version, about = "Density-aware core-set selection experiments")]
struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; defaults to the config's `out_dir`, then $DACS_OUT_DIR, then `dacs-out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Metric for coverage, bounds and evaluation.
    #[arg(long, global = true, value_enum)]
    metric: Option<MetricArg>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample a synthetic dataset to `dataset.csv`.
    Generate,
    /// Run the multi-round selection protocol.
    Select,
    /// Bound report and core-set loss for a given selection.
    Evaluate,
    /// Regress average radial distance on inverse density.
    Calibrate,
    /// k-center greedy against density-aware greedy over several seeds.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Select => "select",
            Command::Evaluate => "evaluate",
            Command::Calibrate => "calibrate",
            Command::Compare => "compare",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MetricArg {
    Euclidean,
    Squared,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Squared => Metric::SquaredEuclidean,
        }
    }
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Invalid("--config <path> is required".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        out_dir: cli.out.clone(),
        metric: cli.metric.map(Metric::from),
    };
    let cfg = ExperimentConfig::load(path, &overrides)?;
    let seed = cfg.seed.or(match &cfg.dataset {
        Some(DatasetSource::Generate(spec)) => Some(spec.seed),
        _ => cfg.protocol.as_ref().map(|p| p.seed),
    });
    let mut metadata = Metadata::new(cli.command.name(), cfg.hash(), seed);
    if let Command::Compare = cli.command {
        metadata.seeds = Some(commands::compare_seeds(&cfg)?);
    }
    let out = Output::create(cfg.out_dir(), metadata)?;
    match cli.command {
        Command::Generate => commands::generate(&cfg, &out),
        Command::Select => commands::select(&cfg, &out),
        Command::Evaluate => commands::evaluate(&cfg, &out),
        Command::Calibrate => commands::calibrate_cmd(&cfg, &out),
        Command::Compare => commands::compare(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(outcome) if outcome.warnings.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
