//! Episode traces and the actor abstraction shared by generators and
//! scripted experts.

use crate::envs::{Action, Environment};
use crate::error::{contract, Result};

/// One episode. `observations` includes the final observation, so it is one
/// longer than `actions` and `rewards`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub terminated: bool,
    pub truncated: bool,
    pub env_seed: u64,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Re-executes the recorded actions from `env_seed`.
    pub fn replay(&self, env: &dyn Environment) -> Result<EpisodeTrace> {
        let mut replay = ReplayActor::new(self.actions.clone());
        rollout(env, &mut replay, self.env_seed)
    }
}

/// Anything that maps observations to actions over one episode.
pub trait Actor {
    /// Clears per-episode state. Called before the first observation.
    fn reset(&mut self);

    fn act(&mut self, observation: &[f64]) -> Result<Action>;
}

/// Runs one full episode.
pub fn rollout(env: &dyn Environment, actor: &mut dyn Actor, seed: u64) -> Result<EpisodeTrace> {
    let (mut state, obs) = env.reset(seed);
    actor.reset();
    let mut trace = EpisodeTrace {
        observations: vec![obs],
        actions: Vec::new(),
        rewards: Vec::new(),
        terminated: false,
        truncated: false,
        env_seed: seed,
    };
    while !state.is_finished() {
        let action = actor.act(trace.observations.last().unwrap())?;
        let out = env.step(&mut state, &action)?;
        trace.observations.push(out.observation);
        trace.actions.push(action);
        trace.rewards.push(out.reward);
        trace.terminated = out.terminated;
        trace.truncated = out.truncated;
    }
    Ok(trace)
}

/// Plays back a fixed action list.
pub struct ReplayActor {
    actions: Vec<Action>,
    cursor: usize,
}

impl ReplayActor {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions, cursor: 0 }
    }
}

impl Actor for ReplayActor {
    fn reset(&mut self) {
        self.cursor = 0;
    }

    fn act(&mut self, _observation: &[f64]) -> Result<Action> {
        let a = self
            .actions
            .get(self.cursor)
            .cloned()
            .ok_or_else(|| contract("replay ran out of recorded actions"))?;
        self.cursor += 1;
        Ok(a)
    }
}
