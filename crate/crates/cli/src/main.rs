//! `kaalab`: run dichotomy certificates, hull and almost automorphy probes,
//! convolutions, delay simulations and Picard solves from a TOML config.
//!
//! Exit codes: 0 pass, 1 failed verdict or refused hypotheses, 2 numerical
//! failure, 3 configuration error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kaalab",
    version,
    about = "Numerical probes for dichotomies, almost automorphy and delay models"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for reports; overrides `run.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// No summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Certify or fit an exponential dichotomy of `[system]`.
    Dichotomy,
    /// Certify the shifted systems along a shift sequence.
    Hull,
    /// Green function discrepancies under diagonal shifts.
    Delta2,
    /// Shift-limit and uniform continuity probes of `probe.signal`.
    Aa,
    /// Bounded solution operators applied to `probe.input`.
    Convolve,
    /// Integrate the delay model from `model.history`.
    Dde,
    /// Solve for the almost automorphic solution by Picard iteration.
    Picard,
    /// Check the model hypotheses only.
    Check,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Dichotomy => "dichotomy",
            Command::Hull => "hull",
            Command::Delta2 => "delta2",
            Command::Aa => "aa",
            Command::Convolve => "convolve",
            Command::Dde => "dde",
            Command::Picard => "picard",
            Command::Check => "check",
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = config::load(path)?;
    let dir = cli.out.clone().or_else(|| cfg.run.out.clone());
    let out = output::Output::new(dir, cli.quiet)?;
    if out.dir().is_some() {
        out.json(
            "meta.json",
            &commands::Meta {
                command: cli.command.name(),
                seed: cli.seed,
                version: env!("CARGO_PKG_VERSION"),
            },
        )?;
    }
    let ctx = commands::Ctx {
        cfg: &cfg,
        out: &out,
        seed: cli.seed,
    };
    match cli.command {
        Command::Dichotomy => commands::dichotomy(&ctx),
        Command::Hull => commands::hull(&ctx),
        Command::Delta2 => commands::delta2(&ctx),
        Command::Aa => commands::aa(&ctx),
        Command::Convolve => commands::convolve(&ctx),
        Command::Dde => commands::dde(&ctx),
        Command::Picard => commands::picard(&ctx),
        Command::Check => commands::check(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
