//! Deterministic classic-control environments behind one [`Environment`]
//! trait, looked up by name at runtime.
//!
//! | env                   | obs | action            | Δt / integrator              | horizon |
//! |-----------------------|-----|-------------------|------------------------------|---------|
//! | CartPole              | 4   | discrete(2)       | 0.02, explicit Euler         | 500     |
//! | MountainCar           | 2   | discrete(3)       | unit step, semi-implicit     | 200     |
//! | MountainCarContinuous | 2   | [-1, 1]           | unit step, semi-implicit     | 999     |
//! | Pendulum              | 3   | [-2, 2]           | 0.05, semi-implicit Euler    | 200     |
//! | Acrobot               | 6   | discrete(3)       | 0.2, one RK4 step            | 500     |
//!
//! Per-environment constants are listed in each submodule. Changing any of
//! them changes every trajectory and breaks checkpoint compatibility.

pub mod acrobot;
pub mod cartpole;
pub mod mountain_car;
pub mod mountain_car_continuous;
pub mod pendulum;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Error, Result};
use crate::seeds;

pub use acrobot::Acrobot;
pub use cartpole::CartPole;
pub use mountain_car::MountainCar;
pub use mountain_car_continuous::MountainCarContinuous;
pub use pendulum::Pendulum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvId {
    CartPole,
    MountainCar,
    MountainCarContinuous,
    Pendulum,
    Acrobot,
}

impl EnvId {
    pub const ALL: [EnvId; 5] = [
        EnvId::CartPole,
        EnvId::MountainCar,
        EnvId::MountainCarContinuous,
        EnvId::Pendulum,
        EnvId::Acrobot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvId::CartPole => "CartPole",
            EnvId::MountainCar => "MountainCar",
            EnvId::MountainCarContinuous => "MountainCarContinuous",
            EnvId::Pendulum => "Pendulum",
            EnvId::Acrobot => "Acrobot",
        }
    }

    pub fn make(self) -> Arc<dyn Environment> {
        match self {
            EnvId::CartPole => Arc::new(CartPole::new()),
            EnvId::MountainCar => Arc::new(MountainCar::new()),
            EnvId::MountainCarContinuous => Arc::new(MountainCarContinuous::new()),
            EnvId::Pendulum => Arc::new(Pendulum::new()),
            EnvId::Acrobot => Arc::new(Acrobot::new()),
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        EnvId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownEnv(s.to_string()))
    }
}

/// Looks up a built-in environment by name.
pub fn by_name(name: &str) -> Result<Arc<dyn Environment>> {
    name.parse::<EnvId>().map(EnvId::make)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionKind {
    Discrete(usize),
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionKind {
    /// Number of network outputs needed to drive this action space.
    pub fn output_dim(&self) -> usize {
        match self {
            ActionKind::Discrete(n) => *n,
            ActionKind::Continuous { low, .. } => low.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub env_id: EnvId,
    pub obs_dim: usize,
    pub action_kind: ActionKind,
    pub max_steps: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn continuous(&self) -> Option<&[f64]> {
        match self {
            Action::Continuous(v) => Some(v),
            Action::Discrete(_) => None,
        }
    }

    pub fn discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(i) => Some(*i),
            Action::Continuous(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub env_id: EnvId,
    /// Physical state variables in the environment's own order.
    pub vars: Vec<f64>,
    pub step_counter: u32,
    pub reset_seed: u64,
    finished: bool,
}

impl EnvState {
    pub fn is_finished(&self) -> bool {
        self.finished
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// Result of applying the raw dynamics once, before horizon bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub vars: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
}

pub trait Environment: Send + Sync {
    fn spec(&self) -> &EnvSpec;

    /// Draws the initial physical state.
    fn initial_vars(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;

    fn observe(&self, vars: &[f64]) -> Vec<f64>;

    /// One step of the dynamics from `vars`. `action` has already been
    /// validated against the spec.
    fn transition(&self, vars: &[f64], action: &Action) -> Transition;

    fn reset(&self, seed: u64) -> (EnvState, Vec<f64>) {
        let mut rng = seeds::rng(seed);
        let vars = self.initial_vars(&mut rng);
        let obs = self.observe(&vars);
        let state = EnvState {
            env_id: self.spec().env_id,
            vars,
            step_counter: 0,
            reset_seed: seed,
            finished: false,
        };
        (state, obs)
    }

    fn step(&self, state: &mut EnvState, action: &Action) -> Result<StepOutcome> {
        let spec = self.spec();
        if state.env_id != spec.env_id {
            return Err(contract(format!(
                "state belongs to {}, stepped with {}",
                state.env_id, spec.env_id
            )));
        }
        if state.finished {
            return Err(contract("stepping a finished episode"));
        }
        validate_action(spec, action)?;
        let t = self.transition(&state.vars, action);
        state.vars = t.vars;
        state.step_counter += 1;
        let truncated = state.step_counter >= spec.max_steps;
        state.finished = t.terminated || truncated;
        Ok(StepOutcome {
            observation: self.observe(&state.vars),
            reward: t.reward,
            terminated: t.terminated,
            truncated,
        })
    }
}

pub fn validate_action(spec: &EnvSpec, action: &Action) -> Result<()> {
    match (&spec.action_kind, action) {
        (ActionKind::Discrete(n), Action::Discrete(i)) if i < n => Ok(()),
        (ActionKind::Continuous { low, high }, Action::Continuous(v))
            if v.len() == low.len()
                && v.iter()
                    .zip(low.iter().zip(high))
                    .all(|(x, (lo, hi))| x.is_finite() && lo <= x && x <= hi) =>
        {
            Ok(())
        }
        _ => Err(contract(format!(
            "action {action:?} outside the action space of {}",
            spec.env_id
        ))),
    }
}

/// Maps raw network outputs to an action: continuous outputs are clipped to
/// `[0, 1]` then scaled affinely onto `[low, high]`; discrete outputs pick
/// the argmax, lowest index on ties.
pub fn decode_action(spec: &EnvSpec, raw: &[f64]) -> Result<Action> {
    if raw.len() != spec.action_kind.output_dim() {
        return Err(contract(format!(
            "{} raw outputs for an action space needing {}",
            raw.len(),
            spec.action_kind.output_dim()
        )));
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(contract("raw network output must be finite"));
    }
    Ok(match &spec.action_kind {
        ActionKind::Discrete(_) => {
            let mut best = 0;
            for (i, &v) in raw.iter().enumerate().skip(1) {
                if v > raw[best] {
                    best = i;
                }
            }
            Action::Discrete(best)
        }
        ActionKind::Continuous { low, high } => Action::Continuous(
            raw.iter()
                .zip(low.iter().zip(high))
                .map(|(&r, (&lo, &hi))| (lo + r.clamp(0.0, 1.0) * (hi - lo)).clamp(lo, hi))
                .collect(),
        ),
    })
}
