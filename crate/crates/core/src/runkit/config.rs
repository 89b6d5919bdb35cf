//! Run configuration in a flat `key = value` text format.
//!
//! ```text
//! # comment
//! env = CartPole
//! generations = 300
//! run_seed = 1
//! ```
//!
//! One pair per line, `#` starts a comment line, blank lines are ignored,
//! keys are unique. Unknown keys are an error. Serialization writes every
//! key in a fixed order.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::coevo::EvolutionParams;
use crate::envs::EnvId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvId,
    pub population_size: usize,
    pub generations: u64,
    pub sigma: f64,
    pub run_seed: u64,
    pub holdout_seed_count: usize,
    pub eval_every: u64,
    pub matches_per_agent: usize,
    pub elite_unmutated: bool,
    /// Generations between checkpoints; 0 writes only the final one.
    pub checkpoint_every: u64,
    /// Not part of the checkpoint payload.
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Defaults for `env`, with a per-task generation budget.
    pub fn for_env(env: EnvId) -> Self {
        let generations = match env {
            EnvId::CartPole | EnvId::Acrobot | EnvId::MountainCarContinuous => 300,
            EnvId::MountainCar => 500,
            EnvId::Pendulum => 2000,
        };
        Self {
            env,
            population_size: 64,
            generations,
            sigma: 0.1,
            run_seed: 0,
            holdout_seed_count: 10,
            eval_every: 10,
            matches_per_agent: 1,
            elite_unmutated: false,
            checkpoint_every: 50,
            output_dir: PathBuf::from("runs").join(env.name()),
        }
    }

    pub fn evolution_params(&self) -> EvolutionParams {
        EvolutionParams {
            population_size: self.population_size,
            sigma: self.sigma,
            matches_per_agent: self.matches_per_agent,
            elite_unmutated: self.elite_unmutated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "population_size must be even and >= 2, got {}",
                self.population_size
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.generations < 1 {
            return Err(Error::Config("generations must be >= 1".into()));
        }
        if self.holdout_seed_count < 1 {
            return Err(Error::Config("holdout_seed_count must be >= 1".into()));
        }
        if self.eval_every < 1 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if self.matches_per_agent < 1 {
            return Err(Error::Config("matches_per_agent must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses a config file body. `env` must be present; every other key
    /// falls back to the defaults for that environment.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let env = pairs
            .iter()
            .find(|(k, _)| k == "env")
            .map(|(_, v)| v.parse::<EnvId>())
            .transpose()?
            .ok_or_else(|| Error::Config("missing required key `env`".into()))?;
        let mut cfg = RunConfig::for_env(env);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
        self.set(k.trim(), v.trim())?;
        self.validate()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
        }
        match key {
            "env" => self.env = value.parse()?,
            "population_size" => self.population_size = num(key, value)?,
            "generations" => self.generations = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "run_seed" => self.run_seed = num(key, value)?,
            "holdout_seed_count" => self.holdout_seed_count = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            "matches_per_agent" => self.matches_per_agent = num(key, value)?,
            "elite_unmutated" => self.elite_unmutated = num(key, value)?,
            "checkpoint_every" => self.checkpoint_every = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every key except `output_dir`, in a fixed order. This is what
    /// checkpoints embed.
    pub fn payload_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "env = {}", self.env);
        let _ = writeln!(s, "population_size = {}", self.population_size);
        let _ = writeln!(s, "generations = {}", self.generations);
        // `{:?}` prints the shortest string that round-trips.
        let _ = writeln!(s, "sigma = {:?}", self.sigma);
        let _ = writeln!(s, "run_seed = {}", self.run_seed);
        let _ = writeln!(s, "holdout_seed_count = {}", self.holdout_seed_count);
        let _ = writeln!(s, "eval_every = {}", self.eval_every);
        let _ = writeln!(s, "matches_per_agent = {}", self.matches_per_agent);
        let _ = writeln!(s, "elite_unmutated = {}", self.elite_unmutated);
        let _ = writeln!(s, "checkpoint_every = {}", self.checkpoint_every);
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = self.payload_text();
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        s
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
        }
        out.push((k, v));
    }
    Ok(out)
}
