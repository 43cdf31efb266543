//! `mixlab`: batch driver for the heat-content experiments.
//!
//! Exit status: 0 when every assertion passes, 1 when an assertion fails,
//! 2 for an unreadable or invalid config, 3 for numerical or I/O failures.

mod commands;
mod config;
mod error;
mod jobs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use mixlab_core::suites::Scale;

use config::{Backend, ExperimentConfig};
use error::{CliError, EXIT_ASSERTION, EXIT_CONFIG};
use output::Artifacts;

#[derive(Parser)]
#[command(name = "mixlab", version, about = "Heat-content asymptotics of time-dependent diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config: a TOML file or a bundled preset name.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Measurement route; overrides the config.
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,

    /// Master seed for Monte Carlo runs; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory [default: the config's `output`, else ./mixlab-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Mixing area Ā of the region's boundary.
    Area,
    /// Heat content per diffusivity from the grid solver and/or Monte Carlo.
    HeatContent,
    /// Fit T = c1·sqrt(eps) + c2·eps and compare c1 with Ā/sqrt(pi).
    Asymptotics,
    /// Coherence ratio of the region with itself.
    Coherence,
    /// Log-log slope of the time-dependent vs averaged solution gap.
    AveragingOrder,
    /// Run verification suites.
    Verify {
        /// Suite name or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Problem size: desk (quick) or full (the acceptance resolutions).
        #[arg(long, default_value = "desk")]
        scale: String,
    },
}

/// Seed for `verify` when none is given.
const DEFAULT_VERIFY_SEED: u64 = 42;

fn run(cli: &Cli, args: &[String]) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        jobs::set_threads(n).map_err(CliError::Config)?;
    }
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let (name, cfg) = match &cli.command {
        Command::Verify { .. } => ("verify", None),
        other => {
            let spec = cli.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))?;
            let name = match other {
                Command::Area => "area",
                Command::HeatContent => "heat-content",
                Command::Asymptotics => "asymptotics",
                Command::Coherence => "coherence",
                _ => "averaging-order",
            };
            (name, Some(ExperimentConfig::load(spec)?))
        }
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("mixlab-out"));
    let mut out = Artifacts::new(&dir)?;
    let outcome = match (&cli.command, &cfg) {
        (Command::Verify { suite, scale }, _) => {
            let scale: Scale = scale.parse().map_err(|e: mixlab_core::Error| CliError::Config(e.to_string()))?;
            commands::verify(suite, scale, cli.seed.unwrap_or(DEFAULT_VERIFY_SEED), &mut out)?
        }
        (Command::Area, Some(c)) => commands::area(c, &mut out)?,
        (Command::HeatContent, Some(c)) => commands::heat_content(c, c.backend(cli.backend), cli.seed, &mut out)?,
        (Command::Asymptotics, Some(c)) => commands::asymptotics(c, c.backend(cli.backend), cli.seed, &mut out)?,
        (Command::Coherence, Some(c)) => commands::coherence(c, c.backend(cli.backend), cli.seed, &mut out)?,
        (Command::AveragingOrder, Some(c)) => commands::averaging_order(c, &mut out)?,
        _ => unreachable!("config loaded for every non-verify command"),
    };
    for line in &outcome.lines {
        println!("{line}");
    }
    out.meta(name, args, started, clock.elapsed(), outcome.passed)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli, &args[1..]) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERTION as u8),
        Err(e) => {
            eprintln!("mixlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
