//! Run harness: the generation loop, checkpoints and metric files.
//!
//! A run directory holds:
//!
//! - `checkpoint.bin` and `checkpoint.bin.sha256`: latest full state
//! - `config.txt`: the effective configuration
//! - `scores.csv`: `generation,elite_score,population_mean`
//!
//! `export` adds `trajectories.csv`: `agent_label,timestep,cumulative_reward`.

pub mod checkpoint;
pub mod config;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::coevo::{self, derive_holdout_seeds, GenerationReport, RunState};
use crate::error::{Error, Result};
use crate::experts;
use crate::metrics::{self, Agent, AgentLabel, ScoreReport, Trajectory};
use crate::seeds::{self, stage};

pub use checkpoint::{Checkpoint, EliteSnapshot};
pub use config::RunConfig;

/// Relative output directories are resolved under this directory when set.
pub const OUTPUT_ROOT_VAR: &str = "IMITEVO_OUTPUT_ROOT";

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const SCORES_FILE: &str = "scores.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const SCORES_HEADER: &str = "generation,elite_score,population_mean";
pub const TRAJECTORIES_HEADER: &str = "agent_label,timestep,cumulative_reward";

pub fn resolve_output_dir(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

/// One-based generations whose elite is kept for trajectory plots: the
/// first generation and 25/50/75/100% of the budget.
pub fn capture_generations(total: u64) -> Vec<u64> {
    let mut out: Vec<u64> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|f: &f64| ((total as f64) * f).ceil().max(1.0) as u64)
        .collect();
    out.dedup();
    out
}

fn ensure_writable(dir: &Path) -> Result<()> {
    let wrap = |source| Error::Unwritable {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(wrap)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(wrap)?;
    fs::remove_file(&probe).map_err(wrap)?;
    Ok(())
}

pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n.max(1));
    }
    b.build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

pub struct Runner {
    pub config: RunConfig,
    pub state: RunState,
    pub history: Vec<ScoreReport>,
    pub elites: Vec<EliteSnapshot>,
    out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub checkpoint_hash: String,
    pub generation: u64,
}

impl Runner {
    /// Fresh run. Fails before any compute if the output directory cannot
    /// be written.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let out_dir = resolve_output_dir(&config.output_dir);
        ensure_writable(&out_dir)?;
        let state = RunState::new(
            config.env,
            config.run_seed,
            config.population_size,
            config.holdout_seed_count,
        )?;
        Ok(Self {
            config,
            state,
            history: Vec::new(),
            elites: Vec::new(),
            out_dir,
        })
    }

    /// Continues from a checkpoint, writing next to it.
    pub fn from_checkpoint(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        let out_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut config = ck.config;
        config.output_dir = out_dir.clone();
        Ok(Self {
            config,
            state: ck.state,
            history: ck.history,
            elites: ck.elites,
            out_dir,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn is_complete(&self) -> bool {
        self.state.generation >= self.config.generations
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            state: self.state.clone(),
            history: self.history.clone(),
            elites: self.elites.clone(),
        }
    }

    /// One generation plus any scheduled score report or elite capture.
    pub fn step(&mut self) -> Result<GenerationReport> {
        let report = coevo::evolve_generation(&mut self.state, &self.config.evolution_params())?;
        let done = self.state.generation;
        if done == 1 || done.is_multiple_of(self.config.eval_every) || done == self.config.generations {
            let env = self.config.env.make();
            let score = metrics::score_population(
                done,
                &report.evaluated_generators,
                report.elite_generator,
                env.as_ref(),
                &report.stats_snapshot,
                &self.state.holdout_seeds,
            )?;
            self.history.push(score);
        }
        if capture_generations(self.config.generations).contains(&done) {
            self.elites.push(EliteSnapshot {
                generation: done,
                genome: report.elite_genome().clone(),
                stats: report.stats_snapshot.clone(),
            });
        }
        Ok(report)
    }

    pub fn save(&self) -> Result<RunArtifacts> {
        let path = self.out_dir.join(CHECKPOINT_FILE);
        let hash = self.checkpoint().save(&path)?;
        fs::write(self.out_dir.join("config.txt"), self.config.to_text())?;
        fs::write(self.out_dir.join(SCORES_FILE), scores_csv(&self.history))?;
        Ok(RunArtifacts {
            out_dir: self.out_dir.clone(),
            checkpoint: path,
            checkpoint_hash: hash,
            generation: self.state.generation,
        })
    }

    /// Steps until `stop` generations are complete (capped at the budget),
    /// checkpointing on schedule, then saves.
    pub fn run_until(&mut self, stop: u64, mut on_generation: impl FnMut(&Runner, &GenerationReport)) -> Result<RunArtifacts> {
        let stop = stop.min(self.config.generations);
        while self.state.generation < stop {
            let report = self.step()?;
            on_generation(self, &report);
            let every = self.config.checkpoint_every;
            if every > 0 && self.state.generation.is_multiple_of(every) && self.state.generation < stop {
                self.save()?;
            }
        }
        self.save()
    }

    pub fn run_to_completion(&mut self, on_generation: impl FnMut(&Runner, &GenerationReport)) -> Result<RunArtifacts> {
        self.run_until(self.config.generations, on_generation)
    }
}

pub fn scores_csv(history: &[ScoreReport]) -> String {
    let mut s = String::from(SCORES_HEADER);
    s.push('\n');
    for r in history {
        let _ = writeln!(s, "{},{},{}", r.generation, r.elite_score, r.population_mean_score);
    }
    s
}

pub fn trajectories_csv(trajectories: &[Trajectory]) -> String {
    let mut s = String::from(TRAJECTORIES_HEADER);
    s.push('\n');
    for t in trajectories {
        for (i, c) in t.cumulative.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", t.label, i + 1, c);
        }
    }
    s
}

/// Runs `config` to completion in a pool of `workers` threads (machine
/// parallelism when `None`).
pub fn run(config: RunConfig, workers: Option<usize>) -> Result<RunArtifacts> {
    let pool = thread_pool(workers)?;
    let mut runner = Runner::new(config)?;
    pool.install(|| runner.run_to_completion(|_, _| {}))
}

#[derive(Debug)]
pub enum ResumeOutcome {
    Continued(RunArtifacts),
    AlreadyComplete { generation: u64 },
}

/// Continues a checkpointed run to its configured generation count.
pub fn resume(path: &Path, workers: Option<usize>) -> Result<ResumeOutcome> {
    let mut runner = Runner::from_checkpoint(path)?;
    if runner.is_complete() {
        return Ok(ResumeOutcome::AlreadyComplete {
            generation: runner.state.generation,
        });
    }
    let pool = thread_pool(workers)?;
    pool.install(|| runner.run_to_completion(|_, _| {}))
        .map(ResumeOutcome::Continued)
}

/// A reset seed never used for training or holdout scoring in this run.
pub fn fresh_trajectory_seed(state: &RunState) -> u64 {
    let used: HashSet<u64> = state
        .match_seeds
        .iter()
        .chain(&state.holdout_seeds)
        .copied()
        .collect();
    (0u64..)
        .map(|i| seeds::derive(state.run_seed, &[stage::TRAJECTORY, i]))
        .find(|s| !used.contains(s))
        .expect("seed space is not exhausted")
}

/// Expert trajectory followed by one per captured elite, all on the same
/// fresh seed.
pub fn trajectories(ck: &Checkpoint) -> Result<Vec<Trajectory>> {
    let env = ck.config.env.make();
    let seed = fresh_trajectory_seed(&ck.state);
    let mut expert = experts::for_env(ck.config.env);
    let mut out = vec![metrics::score_trajectory(
        Agent::Expert(expert.as_mut()),
        AgentLabel::Expert,
        env.as_ref(),
        seed,
    )?];
    for e in &ck.elites {
        out.push(metrics::score_trajectory(
            Agent::Generator {
                genome: &e.genome,
                stats: &e.stats,
            },
            AgentLabel::Elite(e.generation),
            env.as_ref(),
            seed,
        )?);
    }
    Ok(out)
}

/// Writes `scores.csv` and `trajectories.csv` for a checkpoint.
pub fn export_figures_data(checkpoint: &Path, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let ck = Checkpoint::load(checkpoint)?;
    if ck.history.is_empty() {
        return Err(Error::Missing("checkpoint has no score history".into()));
    }
    if ck.elites.is_empty() {
        return Err(Error::Missing("checkpoint has no captured elites".into()));
    }
    let traj = trajectories(&ck)?;
    ensure_writable(out_dir)?;
    let scores = out_dir.join(SCORES_FILE);
    let trajs = out_dir.join(TRAJECTORIES_FILE);
    fs::write(&scores, scores_csv(&ck.history))?;
    fs::write(&trajs, trajectories_csv(&traj))?;
    Ok((scores, trajs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub generation: u64,
    pub seeds: Vec<u64>,
    pub elite_index: usize,
    pub elite_score: f64,
    pub population_mean: f64,
    pub expert_score: f64,
}

/// Scores the checkpoint's current generators against the standardizer
/// they will see next, on `n` holdout seeds that no training generation
/// used.
pub fn evaluate_checkpoint(checkpoint: &Path, n: usize, workers: Option<usize>) -> Result<EvalSummary> {
    if n == 0 {
        return Err(Error::Config("--seeds must be >= 1".into()));
    }
    let ck = Checkpoint::load(checkpoint)?;
    let used: HashSet<u64> = ck.state.match_seeds.iter().copied().collect();
    let mut seeds: Vec<u64> = Vec::with_capacity(n);
    let mut want = n;
    while seeds.len() < n {
        seeds = derive_holdout_seeds(ck.config.run_seed, want)
            .into_iter()
            .filter(|s| !used.contains(s))
            .take(n)
            .collect();
        want += 1;
    }
    let env = ck.config.env.make();
    let elite = ck.state.elites.map_or(0, |(g, _)| g);
    let pool = thread_pool(workers)?;
    let report = pool.install(|| {
        metrics::score_population(
            ck.state.generation,
            &ck.state.generators.members,
            elite,
            env.as_ref(),
            &ck.state.stats,
            &seeds,
        )
    })?;
    let mut expert = experts::for_env(ck.config.env);
    let expert_score = metrics::evaluate_expert(expert.as_mut(), env.as_ref(), &seeds)?;
    Ok(EvalSummary {
        generation: ck.state.generation,
        seeds,
        elite_index: elite,
        elite_score: report.elite_score,
        population_mean: report.population_mean_score,
        expert_score,
    })
}
