use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reachlab_harness::commands;
use reachlab_harness::config;
use reachlab_harness::{HarnessError, Result};

#[derive(Parser)]
#[command(name = "reachlab", version, about = "Train and evaluate reaching agents on a model x requirement x tolerance grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Config file of dotted `key = value` lines applied over the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory (train, evaluate, report) or output directory (rollout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Global grid seed (train) or episode seed (rollout).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Evaluation rollouts per agent.
    #[arg(long, global = true)]
    n_rollouts: Option<usize>,
    /// Use the large-budget preset instead of the desk-scale one.
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train every grid cell not already complete in the run directory.
    Train,
    /// Evaluate trained agents and fit Fitts's law per model and requirement.
    Evaluate,
    /// Write the results table and figures.
    Report,
    /// Record a single evaluation episode for debugging.
    Rollout {
        /// Agent file; the zero policy is used when omitted.
        #[arg(long)]
        agent: Option<PathBuf>,
    },
    /// Parse and validate a configuration, then print it fully resolved.
    ValidateConfig,
}

fn out_dir(c: &Common) -> Result<PathBuf> {
    c.out.clone().ok_or_else(|| HarnessError::Config("--out is required".into()))
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let workers = c.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(HarnessError::Config("--workers must be positive".into()));
    }
    match &cli.command {
        Command::Train => {
            let config = commands::resolve_config(c.config.as_deref(), c.paper_scale, c.seed, c.n_rollouts)?;
            let out = out_dir(c)?;
            let s = commands::with_workers(workers, || commands::train(&config, &out))??;
            println!("trained {}, already complete {}", s.trained.len(), s.skipped.len());
        }
        Command::Evaluate => {
            let out = out_dir(c)?;
            let s = commands::with_workers(workers, || commands::evaluate(&out, c.n_rollouts))??;
            println!("evaluated {} agents", s.evaluated.len());
        }
        Command::Report => {
            let out = out_dir(c)?;
            for f in commands::report(&out)? {
                println!("{}", out.join(f).display());
            }
        }
        Command::Rollout { agent } => {
            let config = commands::resolve_config(c.config.as_deref(), c.paper_scale, None, c.n_rollouts)?;
            let out = out_dir(c)?;
            let t = commands::rollout(&config, &out, agent.as_deref(), c.seed.unwrap_or(0))?;
            println!(
                "{} steps, success {}, written to {}",
                t.n_steps(),
                t.success,
                out.join("rollout.csv").display()
            );
        }
        Command::ValidateConfig => {
            let config = commands::resolve_config(c.config.as_deref(), c.paper_scale, c.seed, c.n_rollouts)?;
            print!("{}", config::to_flat_string(&config));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
