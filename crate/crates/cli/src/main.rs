//! `mmdemod` command-line tool.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{first_line, load_config, Mode, Opts, RunConfig};

#[derive(Parser)]
#[command(name = "mmdemod", version, about = "Multichannel AM-FM demodulation and frequency features")]
struct Cli {
    /// Flat key=value file with defaults for any option.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write per-band frequency and amplitude tracks.
    Demod(Opts),
    /// Write MIF or CIF feature matrices.
    Features(Opts),
    /// Compare multichannel and single-channel demodulation on synthetic data.
    Evaluate(Opts),
}

fn run(cli: Cli) -> Result<()> {
    let (mode, flags) = match cli.command {
        Command::Demod(o) => (Mode::Demod, o),
        Command::Features(o) => (Mode::Features, o),
        Command::Evaluate(o) => (Mode::Evaluate, o),
    };
    let opts = match &cli.config {
        Some(path) => flags.over(load_config(path)?),
        None => flags,
    };
    let cfg = RunConfig::resolve(mode, opts)?;
    match mode {
        Mode::Demod => commands::cmd_demod(&cfg),
        Mode::Features => commands::cmd_features(&cfg),
        Mode::Evaluate => commands::cmd_evaluate(&cfg, &mut std::io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {}", first_line(&e.to_string()));
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
