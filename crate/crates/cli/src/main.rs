use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Error};
use clap::{Parser, Subcommand};
use layercache::experiment::{figure_preset, run_config, ExperimentConfig, RunMode, PRESET_NAMES};

/// Worker count override for the parallel sweep.
const WORKERS_VAR: &str = "LAYERCACHE_WORKERS";

#[derive(Parser)]
#[command(name = "layercache", version, about = "Layered and multi-representation cache experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured policies over generated traces.
    Simulate(RunArgs),
    /// Evaluate the characteristic-time approximation.
    Approx(RunArgs),
    /// Evaluate the large-catalog limits.
    Asymptotic(RunArgs),
    /// Approximation plus exact static placements.
    Compare(RunArgs),
    /// Run a built-in figure preset.
    Preset {
        /// One of the preset names; `list` prints them.
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Print the resolved config as JSON instead of running it.
        #[arg(long)]
        dump: bool,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config. Its `mode` is replaced by the subcommand's.
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum Failure {
    Invalid(Error),
    Runtime(Error),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (e, code) = match self {
            Failure::Invalid(e) => (e, 2),
            Failure::Runtime(e) => (e, 1),
        };
        eprintln!("error: {e:#}");
        ExitCode::from(code)
    }
}

/// Reads a config; unreadable files are runtime errors, malformed ones are
/// validation errors.
fn read(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| {
        let wrap = if matches!(e, layercache::Error::Io(_)) { Failure::Runtime } else { Failure::Invalid };
        wrap(Error::new(e).context(format!("reading {}", path.display())))
    })
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let cfg = read(path)?;
    cfg.validate()
        .with_context(|| format!("{} is invalid", path.display()))
        .map_err(Failure::Invalid)?;
    Ok(cfg)
}

fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let output = run_config(cfg, out)
        .with_context(|| format!("running `{}`", cfg.name))
        .map_err(Failure::Runtime)?;
    println!("wrote {} rows to {}", output.rows.len(), output.csv.display());
    println!("metadata in {}", output.meta.display());
    Ok(())
}

fn init_workers() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Invalid(anyhow::anyhow!("{WORKERS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("starting the worker pool")
        .map_err(Failure::Runtime)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    init_workers()?;
    let (args, mode) = match cli.command {
        Command::Simulate(a) => (a, RunMode::Simulate),
        Command::Approx(a) => (a, RunMode::Approx),
        Command::Asymptotic(a) => (a, RunMode::Asymptotic),
        Command::Compare(a) => (a, RunMode::Compare),
        Command::Preset { name, out, dump } => {
            if name == "list" {
                for n in PRESET_NAMES {
                    println!("{n}");
                }
                return Ok(());
            }
            let cfg = figure_preset(&name).map_err(|e| Failure::Invalid(e.into()))?;
            if dump {
                let json = cfg.to_json().map_err(|e| Failure::Runtime(e.into()))?;
                println!("{json}");
                return Ok(());
            }
            return run(&cfg, &out);
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!(
                "{}: ok ({} scenarios, {} policies, {} budgets)",
                cfg.name,
                cfg.scenarios.len(),
                cfg.policies.len(),
                cfg.budgets.len()
            );
            return Ok(());
        }
    };
    let mut cfg = read(&args.config)?;
    cfg.mode = mode;
    cfg.validate()
        .with_context(|| format!("{} is invalid in {} mode", args.config.display(), mode.as_str()))
        .map_err(Failure::Invalid)?;
    run(&cfg, &args.out)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
