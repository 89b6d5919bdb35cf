//! Mountain car, continuous thrust in `[-1, 1]`.
//!
//! Constants: position in `[-1.2, 0.6]`, speed limit 0.07, goal position
//! 0.45 (with velocity ≥ 0), power 0.0015, gravity term 0.0025. Reward is
//! `−0.1·a²` per step plus 100 on reaching the goal. Initial position uniform
//! in `[-0.6, -0.4]`, velocity 0.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionKind, EnvId, EnvSpec, Environment, Transition};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.45;
pub const POWER: f64 = 0.0015;
pub const GRAVITY: f64 = 0.0025;

pub struct MountainCarContinuous {
    spec: EnvSpec,
}

impl MountainCarContinuous {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                env_id: EnvId::MountainCarContinuous,
                obs_dim: 2,
                action_kind: ActionKind::Continuous {
                    low: vec![-1.0],
                    high: vec![1.0],
                },
                max_steps: 999,
            },
        }
    }
}

impl Default for MountainCarContinuous {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for MountainCarContinuous {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_vars(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.random_range(-0.6..-0.4), 0.0]
    }

    fn observe(&self, vars: &[f64]) -> Vec<f64> {
        vars.to_vec()
    }

    fn transition(&self, vars: &[f64], action: &Action) -> Transition {
        let a = action.continuous().map_or(0.0, |v| v[0]);
        let force = a.clamp(-1.0, 1.0);
        let mut position = vars[0];
        let mut velocity = vars[1];
        velocity += force * POWER - GRAVITY * (3.0 * position).cos();
        velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
        position += velocity;
        position = position.clamp(MIN_POSITION, MAX_POSITION);
        if position == MIN_POSITION && velocity < 0.0 {
            velocity = 0.0;
        }
        let terminated = position >= GOAL_POSITION && velocity >= 0.0;
        let mut reward = if terminated { 100.0 } else { 0.0 };
        reward -= a * a * 0.1;
        Transition {
            vars: vec![position, velocity],
            reward,
            terminated,
        }
    }
}
