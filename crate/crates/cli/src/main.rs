//! Command-line front end: dataset generation, pretraining, paired transfer
//! experiments, and report aggregation, all driven by JSON config files.
//!
//! Exit codes: 0 success, 1 input or config error, 2 numeric error,
//! 3 degenerate significance-test input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gnnlab::exp::{cmd_generate, cmd_metrics, cmd_pretrain, cmd_report, cmd_transfer};

#[derive(Parser)]
#[command(name = "gnnlab", version, about = "Transfer experiments on synthetic graph tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a preset or an explicit generator config.
    Generate {
        /// JSON file: {"out_dir", one of "preset"|"node"|"graph", optional
        /// "calibrate" and "permute_labels"}.
        config: PathBuf,
    },
    /// Train one model from scratch and save its checkpoint.
    Pretrain {
        /// Experiment config JSON; the transfer protocol must be absent.
        config: PathBuf,
    },
    /// Run paired base/transfer training across seeds and save all artifacts.
    Transfer {
        /// Experiment config JSON.
        config: PathBuf,
    },
    /// Aggregate finished experiments into CSV tables and SVG charts.
    Report {
        /// Experiment output directories, as written by `transfer`.
        #[arg(required = true)]
        experiments: Vec<PathBuf>,
        /// Control arm for the significance tests, by label or directory;
        /// defaults to the first experiment.
        #[arg(long)]
        control: Option<String>,
        /// Directory for report.csv, vs_best.csv, and the charts.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the community metrics of a stored dataset as JSON.
    Metrics {
        /// Dataset directory, as written by `generate`.
        dataset: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { config } => cmd_generate(config),
        Command::Pretrain { config } => cmd_pretrain(config),
        Command::Transfer { config } => cmd_transfer(config),
        Command::Report {
            experiments,
            control,
            out,
        } => cmd_report(experiments, control.as_deref(), out),
        Command::Metrics { dataset } => cmd_metrics(dataset),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gnnlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
