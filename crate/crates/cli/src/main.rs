use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use lowmach_core::config::ExperimentConfig;
use lowmach_core::scenario::SHIPPED_SCENARIOS;
use lowmach_core::sweep::{format_summary, SpectralSetup};
use lowmach_core::{parse_config, run_sweep, shipped_config, verify_run, write_run, Error, Scenario};

/// Low Mach number flow around a moving obstacle: sweeps, spectra and checks.
#[derive(Parser)]
#[command(name = "lowmach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the eps sweep of a configuration and write a run directory.
    Run {
        /// Config file, or the name of a shipped scenario.
        #[arg(long)]
        config: String,
        /// Output directory (default: runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check every invariant of a finished run directory.
    Verify { dir: PathBuf },
    /// Print the Neumann eigenvalue table of the spectral grid.
    Spectrum {
        #[arg(long)]
        config: String,
    },
    /// Like `run`, with the eps list replaced.
    Sweep {
        #[arg(long)]
        config: String,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a shipped scenario in canonical form.
    Scenario { name: Option<String> },
}

/// Exit status: 1 for numerical failures, 2 for configuration errors.
enum Failure {
    Numerical(anyhow::Error),
    Config(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Failure {
        match e.downcast_ref::<Error>() {
            Some(inner) if inner.is_config_error() => Failure::Config(e),
            _ => Failure::Numerical(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        anyhow::Error::from(e).into()
    }
}

fn load_config(arg: &str) -> Result<ExperimentConfig, Failure> {
    let path = Path::new(arg);
    if !path.exists() && SHIPPED_SCENARIOS.iter().any(|(n, _)| *n == arg) {
        return Ok(shipped_config(arg)?);
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(Failure::Config)?;
    let config = parse_config(&text).map_err(|e| Failure::Config(anyhow::Error::from(e).context(arg.to_string())))?;
    config.validate().map_err(|e| Failure::Config(anyhow::Error::from(e).context(arg.to_string())))?;
    Ok(config)
}

fn run(config: ExperimentConfig, out: Option<PathBuf>) -> Result<bool, Failure> {
    let dir = out.unwrap_or_else(|| Path::new("runs").join(&config.name));
    log::info!("sweep over eps = {:?} into {}", config.sweep.eps, dir.display());
    let result = run_sweep(&config)?;
    let grid = Scenario::from_config(&config)?.grid;
    write_run(&result, &grid, &dir).with_context(|| format!("writing {}", dir.display()))?;
    print!("{}", format_summary(&result.summary));
    let report = verify_run(&dir)?;
    for c in report.failures() {
        eprintln!("FAIL {} value={:e} tol={:e}", c.name, c.value, c.tolerance);
    }
    println!("run directory: {}", dir.display());
    Ok(report.passed())
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Run { config, out } => run(load_config(&config)?, out),
        Command::Sweep { config, eps, out } => {
            let mut config = load_config(&config)?;
            config.sweep.eps = eps;
            config.validate()?;
            run(config, out)
        }
        Command::Verify { dir } => {
            let report = verify_run(&dir).with_context(|| format!("verifying {}", dir.display()))?;
            print!("{report}");
            Ok(report.passed())
        }
        Command::Spectrum { config } => {
            let config = load_config(&config)?;
            let scenario = Scenario::from_config(&config)?;
            let setup = SpectralSetup::new(scenario.spectral_grid()?, config.spectral.modes)?;
            println!("index,eigenvalue");
            for (k, l) in setup.spectrum.values().iter().enumerate() {
                println!("{k},{l:e}");
            }
            Ok(true)
        }
        Command::Scenario { name } => {
            match name {
                None => {
                    for (n, _) in SHIPPED_SCENARIOS {
                        println!("{n}");
                    }
                }
                Some(n) => print!("{}", shipped_config(&n).map_err(|e| Failure::Config(e.into()))?.canonical_text()),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}
