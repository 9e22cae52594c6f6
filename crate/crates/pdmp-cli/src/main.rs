//! `pdmp` — config-driven experiment runner.
//!
//! Exit codes: 0 success, 2 configuration error, 3 tolerance failure,
//! 4 runtime simulation error.

mod config;
mod runner;

use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use runner::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "pdmp", version, about = "Simulate piecewise deterministic Markov processes and measure discretisation error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate trajectories (exact or discretised) to CSV.
    Simulate(Common),
    /// Run a coupled pair and emit distance or equality curves.
    Couple(Common),
    /// Sweep step sizes, fit the convergence order, gate on a tolerance.
    OrderSweep(Common),
    /// Moment traces of a Lyapunov-style function along both processes.
    Moments(Common),
    /// Running time-average error against the stationary truth.
    Bias(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); defaults to PDMP_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Couple(c) => ("couple", c),
        Command::OrderSweep(c) => ("order-sweep", c),
        Command::Moments(c) => ("moments", c),
        Command::Bias(c) => ("bias", c),
    };
    let raw = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Config(format!("read {:?}: {e}", common.config)))?;
    let mut cfg: ExperimentConfig =
        toml::from_str(&raw).map_err(|e| CliError::Config(format!("parse config: {e}")))?;
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.run.workers = workers;
    } else if let Ok(env_workers) = std::env::var("PDMP_WORKERS") {
        if cfg.run.workers == 0 {
            cfg.run.workers = env_workers
                .parse()
                .map_err(|_| CliError::Config("PDMP_WORKERS must be a number".into()))?;
        }
    }
    if cfg.run.replicas == 0 {
        return Err(CliError::Config("run.replicas must be positive".into()));
    }
    if cfg.run.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.workers)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let out_dir = runner::resolve_out_dir(&cfg, common.out.as_ref());
    runner::write_run_metadata(&out_dir, &cfg, name)?;
    match cli.command {
        Command::Simulate(_) => runner::cmd_simulate(&cfg, &out_dir),
        Command::Couple(_) => runner::cmd_couple(&cfg, &out_dir),
        Command::OrderSweep(_) => runner::cmd_order_sweep(&cfg, &out_dir),
        Command::Moments(_) => runner::cmd_moments(&cfg, &out_dir),
        Command::Bias(_) => runner::cmd_bias(&cfg, &out_dir),
    }
}
