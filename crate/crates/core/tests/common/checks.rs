//! One function per acceptance criterion. Each returns a verdict and a
//! one-line measurement so the acceptance target and the focused test files
//! share the same code.

use std::collections::HashMap;
use std::path::Path;

use imitevo::coevo::{self, derive_holdout_seeds, discriminate, EvolutionParams, RunState};
use imitevo::envs::{Action, EnvId, Environment};
use imitevo::experts;
use imitevo::metrics::{self, trajectory_rmse, AgentLabel};
use imitevo::net::{Genome, HiddenState, NetTopology};
use imitevo::runkit::{self, Checkpoint, RunConfig, Runner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::net_oracle::{Fx, OracleNet};
use super::{ninety_percent_threshold, physics_oracle as po};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

pub const PHYSICS_TOL: f64 = 1e-9;
pub const NETWORK_TOL: f64 = 1e-12;
pub const MUTATION_SIGMA: f64 = 0.1;
pub const MUTATION_MEAN_SE: f64 = 4.0;
pub const MUTATION_VAR_REL: f64 = 0.02;

pub fn config(env: EnvId, seed: u64, generations: u64, dir: &Path) -> RunConfig {
    let mut c = RunConfig::for_env(env);
    c.run_seed = seed;
    c.generations = generations;
    c.output_dir = dir.to_path_buf();
    c
}

// ---------------------------------------------------------------- 1

pub fn determinism(generations: u64, workers: usize) -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = config(EnvId::CartPole, 7, generations, a.path());
    ca.checkpoint_every = 0;
    let mut cb = ca.clone();
    cb.output_dir = b.path().to_path_buf();
    let ra = runkit::run(ca, Some(1)).unwrap();
    let rb = runkit::run(cb, Some(workers)).unwrap();
    let csv_same = std::fs::read(a.path().join(runkit::SCORES_FILE)).unwrap()
        == std::fs::read(b.path().join(runkit::SCORES_FILE)).unwrap();
    Outcome::new(
        ra.checkpoint_hash == rb.checkpoint_hash && csv_same,
        format!(
            "{generations} gens, workers 1 vs {workers}: {} / {}, scores.csv identical: {csv_same}",
            &ra.checkpoint_hash[..16],
            &rb.checkpoint_hash[..16]
        ),
    )
}

// ---------------------------------------------------------------- 2

fn sample_state(env: EnvId, rng: &mut ChaCha8Rng) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    match env {
        EnvId::CartPole => vec![u(-2.4, 2.4), u(-3.0, 3.0), u(-0.21, 0.21), u(-3.5, 3.5)],
        EnvId::MountainCar | EnvId::MountainCarContinuous => {
            let mut s = vec![u(-1.2, 0.6), u(-0.07, 0.07)];
            // Exercise the left wall.
            if s[0] < -1.15 {
                s[1] = -s[1].abs();
            }
            s
        }
        EnvId::Pendulum => vec![u(-2.0 * PI, 2.0 * PI), u(-8.0, 8.0)],
        EnvId::Acrobot => vec![u(-PI, PI), u(-PI, PI), u(-4.0 * PI, 4.0 * PI), u(-9.0 * PI, 9.0 * PI)],
    }
}

fn sample_action(env: EnvId, rng: &mut ChaCha8Rng) -> Action {
    match env {
        EnvId::CartPole => Action::Discrete(rng.random_range(0..2)),
        EnvId::MountainCar | EnvId::Acrobot => Action::Discrete(rng.random_range(0..3)),
        EnvId::MountainCarContinuous => Action::Continuous(vec![rng.random_range(-1.0..=1.0)]),
        EnvId::Pendulum => Action::Continuous(vec![rng.random_range(-2.0..=2.0)]),
    }
}

pub fn oracle_step(env: EnvId, s: &[f64], a: &Action) -> po::Step {
    match (env, a) {
        (EnvId::CartPole, Action::Discrete(i)) => po::cartpole(s, *i),
        (EnvId::MountainCar, Action::Discrete(i)) => po::mountain_car(s, *i),
        (EnvId::Acrobot, Action::Discrete(i)) => po::acrobot(s, *i),
        (EnvId::MountainCarContinuous, Action::Continuous(v)) => po::mountain_car_continuous(s, v[0]),
        (EnvId::Pendulum, Action::Continuous(v)) => po::pendulum(s, v[0]),
        _ => unreachable!("action kind does not match {env}"),
    }
}

/// Largest deviation over `n` random transitions, and the number of
/// termination-flag disagreements.
pub fn physics_deviation(env: EnvId, n: usize, seed: u64) -> (f64, usize) {
    let model = env.make();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut flag_mismatch = 0;
    for _ in 0..n {
        let s = sample_state(env, &mut rng);
        let a = sample_action(env, &mut rng);
        let got = model.transition(&s, &a);
        let want = oracle_step(env, &s, &a);
        for (i, (g, w)) in got.vars.iter().zip(&want.vars).enumerate() {
            let d = if env == EnvId::Acrobot && i < 2 {
                po::angle_gap(*g, *w)
            } else {
                (g - w).abs()
            };
            worst = worst.max(d);
        }
        worst = worst.max((got.reward - want.reward).abs());
        if got.terminated != want.terminated {
            flag_mismatch += 1;
        }
    }
    (worst, flag_mismatch)
}

pub fn physics(n: usize) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, env) in EnvId::ALL.into_iter().enumerate() {
        let (worst, flags) = physics_deviation(env, n, 0xC0FFEE + k as u64);
        ok &= worst <= PHYSICS_TOL && flags == 0;
        parts.push(format!("{env} {worst:.1e}/{flags}"));
    }
    Outcome::new(ok, format!("{n} transitions each, max|err|/flag mismatches: {}", parts.join(", ")))
}

// ---------------------------------------------------------------- 3

pub struct RandomNet {
    pub genome: Genome,
    pub oracle: OracleNet,
}

pub fn random_net(rng: &mut ChaCha8Rng) -> RandomNet {
    let input = rng.random_range(1..=5);
    let hidden: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=6)).collect();
    let output = rng.random_range(1..=4);
    let recurrent = rng.random_range(0..hidden.len());
    let topo = NetTopology::new(input, hidden.clone(), output, Some(recurrent)).unwrap();
    let normal = Normal::new(0.0, 0.8).unwrap();
    let params: Vec<f64> = (0..topo.param_count()).map(|_| normal.sample(rng)).collect();
    let oracle = OracleNet::new(input, hidden, output, recurrent, &params);
    let genome = Genome::from_params(topo, params, 0).unwrap();
    RandomNet { genome, oracle }
}

/// Largest deviation of outputs and hidden state over `steps` recurrent
/// steps of `count` random networks.
pub fn network_deviation(count: usize, steps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let net = random_net(&mut rng);
        let mut h = HiddenState::zeros(net.oracle.recurrent_dim());
        let mut oh = vec![Fx::zero(); net.oracle.recurrent_dim()];
        for _ in 0..steps {
            let x: Vec<f64> = (0..net.oracle.input).map(|_| rng.random_range(-3.0..3.0)).collect();
            let out = net.genome.step(&x, &mut h).unwrap();
            let (oout, nh) = net.oracle.step(&x, &oh);
            oh = nh;
            for (a, b) in out.iter().zip(&oout) {
                worst = worst.max((a - b.to_f64()).abs());
            }
            for (a, b) in h.values().iter().zip(&oh) {
                worst = worst.max((a - b.to_f64()).abs());
            }
        }
    }
    worst
}

pub fn network(count: usize) -> Outcome {
    let worst = network_deviation(count, 4, 0xBEEF);
    Outcome::new(
        worst <= NETWORK_TOL,
        format!("{count} random genomes x 4 recurrent steps, max|err| {worst:.2e} (tol {NETWORK_TOL:.0e})"),
    )
}

// ---------------------------------------------------------------- 4

pub fn mutation(min_draws: usize) -> Outcome {
    let parent = Genome::zeros(NetTopology::standard(4, 2));
    let per = parent.params().len();
    let rounds = min_draws.div_ceil(per);
    let (mut sum, mut sumsq, mut n) = (0.0f64, 0.0f64, 0usize);
    for i in 0..rounds {
        let child = parent.mutate(imitevo::seeds::derive(99, &[i as u64]), MUTATION_SIGMA).unwrap();
        for &d in child.params() {
            sum += d;
            sumsq += d * d;
            n += 1;
        }
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = sumsq / nf - mean * mean;
    let target = MUTATION_SIGMA * MUTATION_SIGMA;
    let se = (target / nf).sqrt();
    let ok = mean.abs() <= MUTATION_MEAN_SE * se && ((var - target) / target).abs() <= MUTATION_VAR_REL;
    Outcome::new(
        ok,
        format!(
            "{n} draws: mean {mean:.2e} ({:.2} SE), variance {var:.6} ({:+.3}% of 0.01)",
            mean / se,
            100.0 * (var - target) / target
        ),
    )
}

// ---------------------------------------------------------------- 5, 6

/// Survivors of truncation by an independent ranking.
fn survivors(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[b].partial_cmp(&fitness[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(fitness.len() / 2);
    idx
}

fn multiset(genomes: &[&Genome]) -> HashMap<Vec<u8>, usize> {
    let mut m = HashMap::new();
    for g in genomes {
        *m.entry(g.to_bytes()).or_insert(0) += 1;
    }
    m
}

fn selection_holds(evaluated: &[Genome], fitness: &[f64], after: &[Genome]) -> bool {
    let keep = survivors(fitness);
    let doubled: Vec<&Genome> = keep.iter().flat_map(|&i| [&evaluated[i], &evaluated[i]]).collect();
    let now: Vec<&Genome> = after.iter().collect();
    multiset(&doubled) == multiset(&now)
}

pub fn fitness_and_selection(env: EnvId, generations: u64) -> (Outcome, Outcome) {
    let params = EvolutionParams::default();
    let mut state = RunState::new(env, 11, params.population_size, 10).unwrap();
    let (mut matches, mut fit_bad, mut sel_bad) = (0usize, 0usize, 0usize);
    let mut nonzero = 0usize;
    for _ in 0..generations {
        let rep = coevo::evolve_generation(&mut state, &params).unwrap();
        for m in &rep.matches {
            matches += 1;
            let disc = &rep.evaluated_discriminators[m.discriminator_index];
            let dg = discriminate(disc, &m.generator_trace.observations, &rep.stats_snapshot).unwrap();
            let dt = discriminate(disc, &m.expert_trace.observations, &rep.stats_snapshot).unwrap();
            let ok = m.fit_g == dg
                && m.d_of_xg == dg
                && m.d_of_xt == dt
                && m.fit_d == dt - dg
                && (0.0..=1.0).contains(&m.fit_g)
                && (-1.0..=1.0).contains(&m.fit_d)
                && rep.generator_fitness[m.generator_index] == m.fit_g
                && rep.discriminator_fitness[m.discriminator_index] == m.fit_d;
            if !ok {
                fit_bad += 1;
            }
            if dg != 0.0 || dt != 0.0 {
                nonzero += 1;
            }
        }
        if !selection_holds(&rep.evaluated_generators, &rep.generator_fitness, &state.generators.members) {
            sel_bad += 1;
        }
        if !selection_holds(
            &rep.evaluated_discriminators,
            &rep.discriminator_fitness,
            &state.discriminators.members,
        ) {
            sel_bad += 1;
        }
    }
    (
        Outcome::new(
            fit_bad == 0,
            format!("{matches} matches over {generations} gens on {env}, {fit_bad} violations, {nonzero} with non-zero D"),
        ),
        Outcome::new(
            sel_bad == 0,
            format!("{} selection steps over {generations} gens, {sel_bad} violations", 2 * generations),
        ),
    )
}

// ---------------------------------------------------------------- 7, 8

pub struct ConvergenceRun {
    pub seed: u64,
    pub expert_score: f64,
    pub threshold: f64,
    pub best_elite: f64,
    pub best_generation: u64,
    /// First generation whose elite met the threshold.
    pub reached_at: Option<u64>,
    pub checkpoint: Checkpoint,
}

impl ConvergenceRun {
    pub fn passed(&self) -> bool {
        self.reached_at.is_some()
    }
}

/// Full run; the generation's elite is scored on the run's holdout seeds
/// after every generation under the standardizer it acted with.
pub fn convergence_run(env: EnvId, seed: u64, generations: u64, stop_when_reached: bool) -> ConvergenceRun {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(env, seed, generations, dir.path());
    cfg.eval_every = 50;
    cfg.checkpoint_every = 0;
    let mut runner = Runner::new(cfg).unwrap();
    let model = env.make();
    let holdout = runner.state.holdout_seeds.clone();
    let mut expert = experts::for_env(env);
    let expert_score = metrics::evaluate_expert(expert.as_mut(), model.as_ref(), &holdout).unwrap();
    let threshold = ninety_percent_threshold(env, expert_score);
    run_tracking(&mut runner, model.as_ref(), &holdout, stop_when_reached, |s| s >= threshold, expert_score, threshold, seed)
}

#[allow(clippy::too_many_arguments)]
fn run_tracking(
    runner: &mut Runner,
    model: &dyn Environment,
    holdout: &[u64],
    stop_when_reached: bool,
    reached: impl Fn(f64) -> bool,
    expert_score: f64,
    threshold: f64,
    seed: u64,
) -> ConvergenceRun {
    let mut best = f64::NEG_INFINITY;
    let mut best_generation = 0;
    let mut reached_at = None;
    while !runner.is_complete() {
        let rep = runner.step().unwrap();
        let done = runner.state.generation;
        let score = metrics::evaluate_score(rep.elite_genome(), model, &rep.stats_snapshot, holdout).unwrap();
        if score > best {
            best = score;
            best_generation = done;
        }
        if reached_at.is_none() && reached(score) {
            reached_at = Some(done);
            if stop_when_reached {
                break;
            }
        }
    }
    ConvergenceRun {
        seed,
        expert_score,
        threshold,
        best_elite: best,
        best_generation,
        reached_at,
        checkpoint: runner.checkpoint(),
    }
}

pub fn describe(run: &ConvergenceRun) -> String {
    format!(
        "seed {}: expert {:.1}, threshold {:.1}, best elite {:.1} @{}, reached {}",
        run.seed,
        run.expert_score,
        run.threshold,
        run.best_elite,
        run.best_generation,
        run.reached_at.map_or("never".to_string(), |g| format!("@{g}"))
    )
}

/// `(rmse first elite, rmse final elite)` against the expert on a fresh seed.
pub fn trajectory_gap(ck: &Checkpoint) -> (f64, f64) {
    let t = runkit::trajectories(ck).unwrap();
    let expert = t.iter().find(|x| x.label == AgentLabel::Expert).unwrap();
    let elites: Vec<_> = t.iter().filter(|x| matches!(x.label, AgentLabel::Elite(_))).collect();
    let first = elites.first().unwrap();
    let last = elites.last().unwrap();
    (trajectory_rmse(first, expert), trajectory_rmse(last, expert))
}

// ---------------------------------------------------------------- 9

pub struct GapRun {
    pub seed: u64,
    pub first_elite: f64,
    pub expert_score: f64,
    pub target: f64,
    pub best_elite: f64,
    pub reached_at: Option<u64>,
}

pub fn pendulum_gap_run(seed: u64, generations: u64) -> GapRun {
    let env = EnvId::Pendulum;
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(env, seed, generations, dir.path());
    cfg.eval_every = generations;
    cfg.checkpoint_every = 0;
    let mut runner = Runner::new(cfg).unwrap();
    let model = env.make();
    let holdout = runner.state.holdout_seeds.clone();
    let mut expert = experts::for_env(env);
    let expert_score = metrics::evaluate_expert(expert.as_mut(), model.as_ref(), &holdout).unwrap();

    let rep = runner.step().unwrap();
    let first = metrics::evaluate_score(rep.elite_genome(), model.as_ref(), &rep.stats_snapshot, &holdout).unwrap();
    let target = first + 0.5 * (expert_score - first);
    let run = run_tracking(&mut runner, model.as_ref(), &holdout, true, |s| s >= target, expert_score, target, seed);
    GapRun {
        seed,
        first_elite: first,
        expert_score,
        target,
        best_elite: run.best_elite.max(first),
        reached_at: run.reached_at,
    }
}

// ---------------------------------------------------------------- 10

pub const EXPERT_FLOORS: [(EnvId, f64); 5] = [
    (EnvId::CartPole, 475.0),
    (EnvId::MountainCar, -110.0),
    (EnvId::MountainCarContinuous, 90.0),
    (EnvId::Acrobot, -100.0),
    (EnvId::Pendulum, -250.0),
];

pub fn expert_mean(env: EnvId, episodes: usize) -> f64 {
    let seeds = derive_holdout_seeds(0, episodes);
    let model = env.make();
    let mut expert = experts::for_env(env);
    metrics::evaluate_expert(expert.as_mut(), model.as_ref(), &seeds).unwrap()
}

pub fn expert_floors(episodes: usize) -> Outcome {
    let mut ok = true;
    let parts: Vec<String> = EXPERT_FLOORS
        .iter()
        .map(|&(env, floor)| {
            let m = expert_mean(env, episodes);
            ok &= m >= floor;
            format!("{env} {m:.1} (>= {floor})")
        })
        .collect();
    Outcome::new(ok, format!("{episodes} seeds: {}", parts.join(", ")))
}

// ---------------------------------------------------------------- 11

/// Straight run versus a run stopped at `cut`, dropped, and resumed from
/// its checkpoint file.
pub fn resume_equivalence(env: EnvId, generations: u64, cut: u64) -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = config(env, 5, generations, a.path());
    ca.eval_every = 3;
    ca.checkpoint_every = cut;
    let mut cb = ca.clone();
    cb.output_dir = b.path().to_path_buf();

    let straight = Runner::new(ca).unwrap().run_to_completion(|_, _| {}).unwrap();
    let partial = {
        let mut r = Runner::new(cb).unwrap();
        r.run_until(cut, |_, _| {}).unwrap()
    };
    let resumed = match runkit::resume(&partial.checkpoint, Some(1)).unwrap() {
        runkit::ResumeOutcome::Continued(art) => art,
        runkit::ResumeOutcome::AlreadyComplete { .. } => unreachable!(),
    };
    let bytes_same = std::fs::read(&straight.checkpoint).unwrap() == std::fs::read(&resumed.checkpoint).unwrap();
    let csv_same = std::fs::read(a.path().join(runkit::SCORES_FILE)).unwrap()
        == std::fs::read(b.path().join(runkit::SCORES_FILE)).unwrap();
    Outcome::new(
        bytes_same && csv_same && straight.checkpoint_hash == resumed.checkpoint_hash,
        format!(
            "{env} {generations} gens, cut at {cut}: {} vs {}, scores.csv identical: {csv_same}",
            &straight.checkpoint_hash[..16],
            &resumed.checkpoint_hash[..16]
        ),
    )
}
