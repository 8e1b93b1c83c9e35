//! Command-line experiment runner for the cognitive-radio precoding toolkit.
//!
//! Reads a TOML scenario, runs one design or simulation task and writes a CSV
//! table, a manifest that reruns it, and per-curve plot files.

pub mod commands;
pub mod config;
pub mod error;
pub mod plotdata;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{execute, run, Task};
pub use config::{load_config, parse_config, ScenarioConfig};
pub use error::CliError;
pub use table::{ResultRow, ResultTable};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "COGRADIO_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "cogradio", version, about = "Cognitive-radio precoding designs and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML) or a manifest written by an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: `out` from the config, else `results`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides every Monte Carlo sample and trial count.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Relaying ratio and precoding coefficient for fast fading.
    DesignFast,
    /// Relaying ratio and precoding coefficient for slow fading.
    DesignSlow,
    /// Ergodic rates of the design and the baselines.
    SimulateErgodic,
    /// Outage probabilities of the design and the baselines.
    SimulateOutage,
    /// Codeword error rate of the lattice precoder over an SNR sweep.
    LatticeSim,
    /// Distance of the designs from the non-fading closed forms as K grows.
    AsymptoticCheck,
    /// All curves of one comparison figure (2 to 8).
    ReproduceFigure { figure: u32 },
}

impl From<Command> for Task {
    fn from(c: Command) -> Task {
        match c {
            Command::DesignFast => Task::DesignFast,
            Command::DesignSlow => Task::DesignSlow,
            Command::SimulateErgodic => Task::SimulateErgodic,
            Command::SimulateOutage => Task::SimulateOutage,
            Command::LatticeSim => Task::LatticeSim,
            Command::AsymptoticCheck => Task::AsymptoticCheck,
            Command::ReproduceFigure { figure } => Task::ReproduceFigure(figure),
        }
    }
}

/// Sizes the global worker pool from `COGRADIO_WORKERS` when set.
pub fn configure_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV}: expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Other(format!("worker pool: {e}")))
}

/// Effective configuration after the command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.samples {
        cfg.override_samples(n);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_cli(cli: &Cli) -> Result<(), CliError> {
    configure_workers()?;
    let cfg = resolve_config(cli)?;
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let res = run(cli.command.into(), &cfg, &out_dir)?;
    for n in &res.outcome.notes {
        println!("{n}");
    }
    println!("wrote {} ({} rows)", res.csv.display(), res.outcome.table.rows.len());
    println!("wrote {}", res.manifest.display());
    println!("wrote {} plot files under {}", res.plots.len(), out_dir.join("plotdata").display());
    Ok(())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_cli(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
