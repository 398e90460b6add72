use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polaron_cli::commands::{run_husimi, run_localization, run_pekar, run_sweep, RunError, Status};
use polaron_cli::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "polaron", version, about = "Quasi-classical polaron experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the classical functional.
    PekarMin(Common),
    /// Ground states over the configured alphas, compared with the classical minimizer.
    AlphaSweep(Common),
    /// Localization identities, IMS and energy split over a radius ladder.
    LocalizeCheck(Common),
    /// Husimi marginal of one field mode.
    Husimi(Common),
}

fn workers() -> Result<Option<usize>, String> {
    match std::env::var("POLARON_WORKERS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("POLARON_WORKERS must be a positive integer, got `{v}`")),
        },
    }
}

fn run(cmd: Command) -> Result<Status, RunError> {
    let (common, f): (_, fn(&ExperimentConfig, &std::path::Path) -> Result<Status, RunError>) = match cmd {
        Command::PekarMin(c) => (c, run_pekar),
        Command::AlphaSweep(c) => (c, run_sweep),
        Command::LocalizeCheck(c) => (c, run_localization),
        Command::Husimi(c) => (c, run_husimi),
    };
    let text = fs::read_to_string(&common.config)
        .map_err(|e| RunError::Config(format!("{}: {e}", common.config.display())))?;
    let config = ExperimentConfig::parse(&text).map_err(|e| RunError::Config(e.to_string()))?;
    let out = common
        .out
        .or_else(|| config.output.clone().map(PathBuf::from))
        .ok_or_else(|| RunError::Config("missing required key `output.dir` (or pass --out)".into()))?;
    f(&config, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match workers() {
        Ok(n) => {
            let mut b = rayon::ThreadPoolBuilder::new();
            if let Some(n) = n {
                b = b.num_threads(n);
            }
            b.build().expect("thread pool")
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(Status::Converged) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => {
            eprintln!("error: solver did not converge; outputs were written");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
