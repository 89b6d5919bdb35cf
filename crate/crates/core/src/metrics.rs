//! Held-out scoring and score trajectories.

use rayon::prelude::*;

use crate::coevo::GeneratorActor;
use crate::envs::Environment;
use crate::error::{contract, Result};
use crate::experts::ExpertPolicy;
use crate::net::Genome;
use crate::standardize::RunningStats;
use crate::trace::{rollout, Actor};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    /// Number of completed generations when the report was taken.
    pub generation: u64,
    pub elite_score: f64,
    pub population_mean_score: f64,
    pub member_scores: Vec<f64>,
    pub holdout_seeds: Vec<u64>,
}

/// Who produced a trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentLabel {
    Expert,
    /// Elite of the given (one-based) generation.
    Elite(u64),
}

impl std::fmt::Display for AgentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentLabel::Expert => f.write_str("expert"),
            AgentLabel::Elite(g) => write!(f, "elite@{g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: AgentLabel,
    /// Cumulative reward after each step.
    pub cumulative: Vec<f64>,
    pub env_seed: u64,
}

impl Trajectory {
    pub fn final_score(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Either kind of agent that can be scored.
pub enum Agent<'a> {
    Generator {
        genome: &'a Genome,
        stats: &'a RunningStats,
    },
    Expert(&'a mut dyn ExpertPolicy),
}

impl Agent<'_> {
    fn episode_rewards(&mut self, env: &dyn Environment, seed: u64) -> Result<Vec<f64>> {
        let trace = match self {
            Agent::Generator { genome, stats } => {
                rollout(env, &mut GeneratorActor::new(genome, stats, env.spec()), seed)?
            }
            Agent::Expert(policy) => {
                let actor: &mut dyn Actor = *policy;
                rollout(env, actor, seed)?
            }
        };
        Ok(trace.rewards)
    }
}

/// Mean undiscounted return of a generator over `seeds`.
pub fn evaluate_score(
    genome: &Genome,
    env: &dyn Environment,
    stats: &RunningStats,
    seeds: &[u64],
) -> Result<f64> {
    if seeds.is_empty() {
        return Err(contract("holdout seed list is empty"));
    }
    let returns = seeds
        .iter()
        .map(|&s| {
            rollout(env, &mut GeneratorActor::new(genome, stats, env.spec()), s)
                .map(|t| t.total_reward())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(returns.iter().sum::<f64>() / seeds.len() as f64)
}

/// Mean undiscounted return of an expert over `seeds`.
pub fn evaluate_expert(policy: &mut dyn ExpertPolicy, env: &dyn Environment, seeds: &[u64]) -> Result<f64> {
    if seeds.is_empty() {
        return Err(contract("holdout seed list is empty"));
    }
    let mut total = 0.0;
    for &s in seeds {
        total += rollout(env, policy, s)?.total_reward();
    }
    Ok(total / seeds.len() as f64)
}

/// Scores every member in parallel and reports the given elite.
pub fn score_population(
    generation: u64,
    members: &[Genome],
    elite: usize,
    env: &dyn Environment,
    stats: &RunningStats,
    seeds: &[u64],
) -> Result<ScoreReport> {
    let member_scores = members
        .par_iter()
        .map(|g| evaluate_score(g, env, stats, seeds))
        .collect::<Result<Vec<_>>>()?;
    let population_mean_score = member_scores.iter().sum::<f64>() / member_scores.len() as f64;
    Ok(ScoreReport {
        generation,
        elite_score: member_scores[elite],
        population_mean_score,
        member_scores,
        holdout_seeds: seeds.to_vec(),
    })
}

pub fn score_trajectory(
    mut agent: Agent<'_>,
    label: AgentLabel,
    env: &dyn Environment,
    seed: u64,
) -> Result<Trajectory> {
    let rewards = agent.episode_rewards(env, seed)?;
    let cumulative = rewards
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();
    Ok(Trajectory {
        label,
        cumulative,
        env_seed: seed,
    })
}

/// RMS difference of two cumulative-reward curves; the shorter curve is
/// padded by holding its final value.
pub fn trajectory_rmse(a: &Trajectory, b: &Trajectory) -> f64 {
    curve_rmse(&a.cumulative, &b.cumulative)
}

pub fn curve_rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    if n == 0 {
        return 0.0;
    }
    let at = |c: &[f64], i: usize| c.get(i).or(c.last()).copied().unwrap_or(0.0);
    let sq: f64 = (0..n).map(|i| (at(a, i) - at(b, i)).powi(2)).sum();
    (sq / n as f64).sqrt()
}
