//! Adversarial co-evolution of generators and discriminators.
//!
//! Each generation runs variation, evaluation and selection in that order.
//! Every generator plays one episode on the generation's shared reset seed,
//! the expert plays the same instance, and each discriminator judges one
//! randomly paired generator episode against the expert episode. Generators
//! score `D(x_G)`; discriminators score `D(x_T) − D(x_G)`. Both populations
//! then go through 50% truncation selection.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::envs::{decode_action, Action, EnvId, EnvSpec, Environment};
use crate::error::{contract, Result};
use crate::experts::{self, ExpertPolicy};
use crate::net::{Genome, HiddenState, NetTopology};
use crate::seeds::{self, stage};
use crate::standardize::RunningStats;
use crate::trace::{rollout, Actor, EpisodeTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PopulationTag {
    Generator,
    Discriminator,
}

impl PopulationTag {
    /// Path component used in seed derivation.
    pub fn seed_tag(self) -> u64 {
        match self {
            PopulationTag::Generator => 0,
            PopulationTag::Discriminator => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub tag: PopulationTag,
    pub members: Vec<Genome>,
    pub generation: u64,
}

impl Population {
    /// `size` zero genomes with lineage ids `(tag << 32) | index`.
    pub fn zeros(tag: PopulationTag, topology: &NetTopology, size: usize) -> Self {
        let members = (0..size)
            .map(|i| Genome::zeros_with_lineage(topology.clone(), (tag.seed_tag() << 32) | i as u64))
            .collect();
        Self {
            tag,
            members,
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Drives an environment with a genome: inputs are standardized against a
/// frozen snapshot and outputs decoded for the action space.
pub struct GeneratorActor<'a> {
    genome: &'a Genome,
    stats: &'a RunningStats,
    spec: &'a EnvSpec,
    state: HiddenState,
}

impl<'a> GeneratorActor<'a> {
    pub fn new(genome: &'a Genome, stats: &'a RunningStats, spec: &'a EnvSpec) -> Self {
        Self {
            genome,
            stats,
            spec,
            state: genome.initial_state(),
        }
    }
}

impl Actor for GeneratorActor<'_> {
    fn reset(&mut self) {
        self.state.reset();
    }

    fn act(&mut self, observation: &[f64]) -> Result<Action> {
        let x = self.stats.apply(observation)?;
        let raw = self.genome.step(&x, &mut self.state)?;
        decode_action(self.spec, &raw)
    }
}

/// Uniformly random bijection: `pairing[generator] = discriminator`.
pub fn pair_populations(size: usize, seed: u64) -> Result<Vec<usize>> {
    if size < 2 {
        return Err(contract(format!("pairing needs at least 2 agents, got {size}")));
    }
    let mut perm: Vec<usize> = (0..size).collect();
    perm.shuffle(&mut seeds::rng(seed));
    Ok(perm)
}

/// Mean over the episode of the discriminator's per-step output clipped to
/// `[0, 1]`. The hidden state starts from zero.
pub fn discriminate(
    discriminator: &Genome,
    observations: &[Vec<f64>],
    stats: &RunningStats,
) -> Result<f64> {
    if observations.is_empty() {
        return Err(contract("cannot discriminate an empty trace"));
    }
    if discriminator.topology().output_dim() != 1 {
        return Err(contract("discriminator must have a single output"));
    }
    let mut h = discriminator.initial_state();
    let mut total = 0.0;
    for obs in observations {
        let out = discriminator.step(&stats.apply(obs)?, &mut h)?;
        total += out[0].clamp(0.0, 1.0);
    }
    Ok(total / observations.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub generator_index: usize,
    pub discriminator_index: usize,
    pub d_of_xg: f64,
    pub d_of_xt: f64,
    pub fit_g: f64,
    pub fit_d: f64,
    pub generator_trace: EpisodeTrace,
    pub expert_trace: EpisodeTrace,
}

impl MatchResult {
    fn from_scores(
        generator_index: usize,
        discriminator_index: usize,
        d_of_xg: f64,
        d_of_xt: f64,
        generator_trace: EpisodeTrace,
        expert_trace: EpisodeTrace,
    ) -> Self {
        Self {
            generator_index,
            discriminator_index,
            d_of_xg,
            d_of_xt,
            fit_g: d_of_xg,
            fit_d: d_of_xt - d_of_xg,
            generator_trace,
            expert_trace,
        }
    }
}

fn trace_stats(trace: &EpisodeTrace, dim: usize) -> Result<RunningStats> {
    let mut s = RunningStats::new(dim);
    for obs in &trace.observations {
        s.update(obs)?;
    }
    Ok(s)
}

/// One generator–discriminator match on the instance reset with
/// `match_seed`. Returns the result and the observations of both episodes
/// accumulated into a fresh delta.
pub fn run_match(
    generator: &Genome,
    discriminator: &Genome,
    expert: &mut dyn ExpertPolicy,
    env: &dyn Environment,
    match_seed: u64,
    stats: &RunningStats,
) -> Result<(MatchResult, RunningStats)> {
    let expert_trace = experts::expert_rollout(expert, env, match_seed)?;
    let generator_trace = rollout(
        env,
        &mut GeneratorActor::new(generator, stats, env.spec()),
        match_seed,
    )?;
    judge(0, 0, generator_trace, discriminator, expert_trace, stats)
}

fn judge(
    generator_index: usize,
    discriminator_index: usize,
    generator_trace: EpisodeTrace,
    discriminator: &Genome,
    expert_trace: EpisodeTrace,
    stats: &RunningStats,
) -> Result<(MatchResult, RunningStats)> {
    let d_of_xg = discriminate(discriminator, &generator_trace.observations, stats)?;
    let d_of_xt = discriminate(discriminator, &expert_trace.observations, stats)?;
    let dim = stats.dim();
    let delta = trace_stats(&generator_trace, dim)?.merge(&trace_stats(&expert_trace, dim)?)?;
    Ok((
        MatchResult::from_scores(
            generator_index,
            discriminator_index,
            d_of_xg,
            d_of_xt,
            generator_trace,
            expert_trace,
        ),
        delta,
    ))
}

/// 50% truncation selection. Returns `map[slot] = source slot`: survivors
/// map to themselves, and the loser at rank `n/2 + k` is overwritten by the
/// survivor at rank `k`. Ranking is by fitness descending, lower index
/// first on ties.
pub fn select_truncate(fitnesses: &[f64]) -> Result<Vec<usize>> {
    let n = fitnesses.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(contract(format!("selection needs an even, non-zero population, got {n}")));
    }
    if fitnesses.iter().any(|f| f.is_nan()) {
        return Err(contract("NaN fitness"));
    }
    let order = rank(fitnesses);
    let mut map: Vec<usize> = (0..n).collect();
    for k in 0..n / 2 {
        map[order[n / 2 + k]] = order[k];
    }
    Ok(map)
}

/// Indices sorted by fitness descending, ties by index ascending.
pub fn rank(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]).then(a.cmp(&b)));
    order
}

/// Highest fitness, lowest index on ties.
pub fn elite_index(fitnesses: &[f64]) -> usize {
    rank(fitnesses)[0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    pub population_size: usize,
    pub sigma: f64,
    pub matches_per_agent: usize,
    /// Skip mutation of the previous generation's elites.
    pub elite_unmutated: bool,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            population_size: 64,
            sigma: 0.1,
            matches_per_agent: 1,
            elite_unmutated: false,
        }
    }
}

/// Everything that evolves from one generation to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub env_id: EnvId,
    pub run_seed: u64,
    /// Number of completed generations.
    pub generation: u64,
    pub generators: Population,
    pub discriminators: Population,
    pub stats: RunningStats,
    /// Environment reset seed consumed by each completed generation.
    pub match_seeds: Vec<u64>,
    pub holdout_seeds: Vec<u64>,
    /// Elite slots `(generator, discriminator)` of the last generation.
    pub elites: Option<(usize, usize)>,
}

impl RunState {
    pub fn new(env_id: EnvId, run_seed: u64, population_size: usize, holdout_count: usize) -> Result<Self> {
        if population_size < 2 || !population_size.is_multiple_of(2) {
            return Err(contract(format!(
                "population size must be even and >= 2, got {population_size}"
            )));
        }
        let env = env_id.make();
        let spec = env.spec();
        let gen_topo = NetTopology::standard(spec.obs_dim, spec.action_kind.output_dim());
        let disc_topo = NetTopology::standard(spec.obs_dim, 1);
        Ok(Self {
            env_id,
            run_seed,
            generation: 0,
            generators: Population::zeros(PopulationTag::Generator, &gen_topo, population_size),
            discriminators: Population::zeros(PopulationTag::Discriminator, &disc_topo, population_size),
            stats: RunningStats::new(spec.obs_dim),
            match_seeds: Vec::new(),
            holdout_seeds: derive_holdout_seeds(run_seed, holdout_count),
            elites: None,
        })
    }

    /// Draws the reset seed for `generation`, skipping any value reserved
    /// for holdout evaluation.
    pub fn match_seed_for(&self, generation: u64) -> u64 {
        let reserved: HashSet<u64> = self.holdout_seeds.iter().copied().collect();
        (0u64..)
            .map(|attempt| seeds::derive(self.run_seed, &[generation, stage::MATCH, attempt]))
            .find(|s| !reserved.contains(s))
            .expect("seed space is not exhausted")
    }
}

pub fn derive_holdout_seeds(run_seed: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        let s = seeds::derive(run_seed, &[stage::HOLDOUT, i]);
        if !out.contains(&s) {
            out.push(s);
        }
        i += 1;
    }
    out
}

#[derive(Debug, Clone)]
pub struct GenerationReport {
    /// Zero-based index of the generation that produced this report.
    pub generation: u64,
    pub match_seed: u64,
    /// Standardizer snapshot every network in this generation saw.
    pub stats_snapshot: RunningStats,
    pub matches: Vec<MatchResult>,
    pub generator_fitness: Vec<f64>,
    pub discriminator_fitness: Vec<f64>,
    pub elite_generator: usize,
    pub elite_discriminator: usize,
    /// Generators as evaluated, after variation and before selection.
    pub evaluated_generators: Vec<Genome>,
    pub evaluated_discriminators: Vec<Genome>,
    pub generator_selection: Vec<usize>,
    pub discriminator_selection: Vec<usize>,
}

impl GenerationReport {
    pub fn elite_genome(&self) -> &Genome {
        &self.evaluated_generators[self.elite_generator]
    }
}

fn vary(
    pop: &Population,
    run_seed: u64,
    generation: u64,
    sigma: f64,
    keep: Option<usize>,
) -> Result<Vec<Genome>> {
    let tag = pop.tag.seed_tag();
    pop.members
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            if keep == Some(i) {
                return Ok(g.clone());
            }
            let seed = seeds::derive(run_seed, &[generation, stage::MUTATE, tag, i as u64]);
            g.mutate(seed, sigma)
        })
        .collect()
}

fn apply_selection(members: &[Genome], map: &[usize]) -> Vec<Genome> {
    map.iter().map(|&src| members[src].clone()).collect()
}

/// Runs one full generation on `state` and returns what was measured.
///
/// Results are bit-identical whatever rayon pool this is called in.
pub fn evolve_generation(state: &mut RunState, params: &EvolutionParams) -> Result<GenerationReport> {
    let n = state.generators.len();
    if n != params.population_size || state.discriminators.len() != n {
        return Err(contract("population sizes disagree with the run parameters"));
    }
    if params.matches_per_agent == 0 {
        return Err(contract("matches_per_agent must be >= 1"));
    }
    let g = state.generation;
    let env = state.env_id.make();
    let env = env.as_ref();
    let snapshot = state.stats.clone();

    // variation
    let (keep_g, keep_d) = match (params.elite_unmutated, state.elites) {
        (true, Some((eg, ed))) => (Some(eg), Some(ed)),
        _ => (None, None),
    };
    let generators = vary(&state.generators, state.run_seed, g, params.sigma, keep_g)?;
    let discriminators = vary(&state.discriminators, state.run_seed, g, params.sigma, keep_d)?;

    // evaluation
    let match_seed = state.match_seed_for(g);
    let mut expert = experts::for_env(state.env_id);
    let expert_trace = experts::expert_rollout(expert.as_mut(), env, match_seed)?;

    let generator_traces: Vec<EpisodeTrace> = generators
        .par_iter()
        .map(|genome| rollout(env, &mut GeneratorActor::new(genome, &snapshot, env.spec()), match_seed))
        .collect::<Result<_>>()?;

    let pairings: Vec<(usize, usize)> = (0..params.matches_per_agent)
        .map(|k| pair_populations(n, seeds::derive(state.run_seed, &[g, stage::PAIR, k as u64])))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flat_map(|perm| perm.into_iter().enumerate())
        .collect();

    let outcomes: Vec<(MatchResult, RunningStats)> = pairings
        .par_iter()
        .map(|&(gi, di)| {
            judge(
                gi,
                di,
                generator_traces[gi].clone(),
                &discriminators[di],
                expert_trace.clone(),
                &snapshot,
            )
        })
        .collect::<Result<_>>()?;

    let mut generator_fitness = vec![0.0; n];
    let mut discriminator_fitness = vec![0.0; n];
    let mut delta = RunningStats::new(snapshot.dim());
    for (m, d) in &outcomes {
        generator_fitness[m.generator_index] += m.fit_g;
        discriminator_fitness[m.discriminator_index] += m.fit_d;
        delta.merge_in(d)?;
    }
    let k = params.matches_per_agent as f64;
    if params.matches_per_agent > 1 {
        generator_fitness.iter_mut().for_each(|f| *f /= k);
        discriminator_fitness.iter_mut().for_each(|f| *f /= k);
    }
    let matches: Vec<MatchResult> = outcomes.into_iter().map(|(m, _)| m).collect();

    // selection
    let generator_selection = select_truncate(&generator_fitness)?;
    let discriminator_selection = select_truncate(&discriminator_fitness)?;
    let elite_generator = elite_index(&generator_fitness);
    let elite_discriminator = elite_index(&discriminator_fitness);

    state.generators.members = apply_selection(&generators, &generator_selection);
    state.discriminators.members = apply_selection(&discriminators, &discriminator_selection);
    state.stats.merge_in(&delta)?;
    state.match_seeds.push(match_seed);
    state.elites = Some((elite_generator, elite_discriminator));
    state.generation += 1;
    state.generators.generation = state.generation;
    state.discriminators.generation = state.generation;

    Ok(GenerationReport {
        generation: g,
        match_seed,
        stats_snapshot: snapshot,
        matches,
        generator_fitness,
        discriminator_fitness,
        elite_generator,
        elite_discriminator,
        evaluated_generators: generators,
        evaluated_discriminators: discriminators,
        generator_selection,
        discriminator_selection,
    })
}
