//! `sitsim`: soliton pulse propagation through a dissipative qubit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sit_core::commands;
use sit_core::config::{Command, RunConfig};
use sit_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "sitsim",
    version,
    about = "Soliton pulse propagation through a dissipative qubit"
)]
struct Cli {
    /// Flat TOML file of `key = value` parameters.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for CSV files and the run manifest.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Number of grid samples (must respect the step limit).
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,

    /// Worker threads for `sweep`.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override any configuration key, e.g. `--set gamma_mhz=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_kv)]
    set: Vec<(String, String)>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Mixing angle, dressed eigenvalue and adiabatic phases of a drive.
    Dressed,
    /// Density-matrix trajectory under the dressed-basis master equation.
    Evolve,
    /// Closed-form envelope against the pendulum oracle.
    Envelope,
    /// Phase accumulation and rate.
    Phase,
    /// Lab-frame ramification surface and ridge trace.
    Ramify,
    /// Area and phase curves over a list of bath rates.
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Dressed => Command::Dressed,
            Cmd::Evolve => Command::Evolve,
            Cmd::Envelope => Command::Envelope,
            Cmd::Phase => Command::Phase,
            Cmd::Ramify => Command::Ramify,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.set.clone();
    if let Some(n) = cli.grid_n {
        overrides.push(("grid_n".into(), n.to_string()));
    }
    if let Some(w) = cli.workers {
        overrides.push(("workers".into(), w.to_string()));
    }
    let result = RunConfig::load(cli.config.as_deref(), &overrides)
        .and_then(|cfg| commands::run(cli.command.into(), &cfg, &cli.out));
    match result {
        Ok((manifest, _)) => {
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            for f in &manifest.outputs {
                println!("{}", cli.out.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sitsim: {e}");
            exit(&e)
        }
    }
}

fn exit(e: &Error) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
