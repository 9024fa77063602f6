use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mixpower::engine::ErrorHandling;
use mixpower_cli::commands::{run_command, Command, CommandOptions};
use mixpower_cli::runspec::{load_runspec_with, Overrides};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Power for one outcome model at one sample size.
    Power,
    /// Power over every (sample size, outcome model) pair.
    Curve,
    /// Estimate the SNR of each outcome model.
    Snr,
    /// Rescale outcome models to their target SNR.
    Scale,
    /// Draw predictor rows.
    Sample,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Remove,
    Pass,
    Stop,
}

/// Monte Carlo power analysis for correlated mixed-scale predictors.
#[derive(Debug, Parser)]
#[command(name = "mixpower", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Run specification (.json or .toml).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    cores: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    errorhandling: Option<Mode>,
    /// Monte Carlo iterations per cell.
    #[arg(long)]
    s: Option<usize>,
    /// Sample sizes (comma separated); row count for `sample`.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Predictor draws for SNR estimation and scaling.
    #[arg(long)]
    m: Option<usize>,
    /// Bootstrap replicates for the SNR standard error.
    #[arg(long)]
    r: Option<usize>,
    /// Suppress progress output.
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        cores: cli.cores,
        seed: cli.seed,
        errorhandling: cli.errorhandling.map(|m| match m {
            Mode::Remove => ErrorHandling::Remove,
            Mode::Pass => ErrorHandling::Pass,
            Mode::Stop => ErrorHandling::Stop,
        }),
        s: cli.s,
        n: cli.n,
    };
    let spec = match load_runspec_with(&cli.spec, &overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let command = match cli.command {
        Cmd::Power => Command::Power,
        Cmd::Curve => Command::Curve,
        Cmd::Snr => Command::Snr,
        Cmd::Scale => Command::Scale,
        Cmd::Sample => Command::Sample,
    };
    let opts = CommandOptions {
        out: cli.out,
        m: cli.m,
        r: cli.r,
        progress: !cli.quiet,
    };
    match run_command(command, &spec, &opts) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
