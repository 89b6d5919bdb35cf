use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use imitevo::runkit::{self, ResumeOutcome, RunConfig};

#[derive(Parser)]
#[command(name = "imitevo", version, about = "Coevolutionary imitation of expert control policies")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start a run from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key=value`, applied after the file. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Continue a run from its checkpoint.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Write scores.csv and trajectories.csv for a checkpoint.
    Export {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint's generators on fresh holdout seeds.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        seeds: usize,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn load_config(path: &PathBuf, overrides: &[String]) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(Failure::Usage)?;
    let mut cfg = RunConfig::parse(&text)
        .with_context(|| format!("invalid config {}", path.display()))
        .map_err(Failure::Usage)?;
    for kv in overrides {
        cfg.apply_override(kv)
            .with_context(|| format!("invalid override `{kv}`"))
            .map_err(Failure::Usage)?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let workers = cli.workers;
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            let art = runkit::run(cfg, workers).map_err(|e| Failure::Runtime(e.into()))?;
            println!(
                "completed {} generations; checkpoint {} sha256 {}",
                art.generation,
                art.checkpoint.display(),
                art.checkpoint_hash
            );
        }
        Command::Resume { checkpoint } => {
            match runkit::resume(&checkpoint, workers).map_err(|e| Failure::Runtime(e.into()))? {
                ResumeOutcome::AlreadyComplete { generation } => {
                    println!("run already complete at generation {generation}; nothing to do");
                }
                ResumeOutcome::Continued(art) => println!(
                    "completed {} generations; checkpoint {} sha256 {}",
                    art.generation,
                    art.checkpoint.display(),
                    art.checkpoint_hash
                ),
            }
        }
        Command::Export { checkpoint, out } => {
            let (scores, trajs) =
                runkit::export_figures_data(&checkpoint, &out).map_err(|e| Failure::Runtime(e.into()))?;
            println!("wrote {}", scores.display());
            println!("wrote {}", trajs.display());
        }
        Command::Eval { checkpoint, seeds } => {
            if seeds == 0 {
                return Err(Failure::Usage(anyhow::anyhow!("--seeds must be >= 1")));
            }
            let s = runkit::evaluate_checkpoint(&checkpoint, seeds, workers)
                .map_err(|e| Failure::Runtime(e.into()))?;
            println!("generation {}", s.generation);
            println!("seeds {}", s.seeds.len());
            println!("elite_index {}", s.elite_index);
            println!("elite_score {}", s.elite_score);
            println!("population_mean {}", s.population_mean);
            println!("expert_score {}", s.expert_score);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
