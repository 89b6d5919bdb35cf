//! Mountain car, discrete thrust.
//!
//! Constants: position in `[-1.2, 0.6]`, speed limit 0.07, goal position
//! 0.5 (with velocity ≥ 0), force 0.001, gravity 0.0025. Actions
//! `{0: left, 1: none, 2: right}`. Reward −1 per step. Initial position
//! uniform in `[-0.6, -0.4]`, velocity 0.
//!
//! State order: `(position, velocity)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionKind, EnvId, EnvSpec, Environment, Transition};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
pub const FORCE: f64 = 0.001;
pub const GRAVITY: f64 = 0.0025;

pub struct MountainCar {
    spec: EnvSpec,
}

impl MountainCar {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                env_id: EnvId::MountainCar,
                obs_dim: 2,
                action_kind: ActionKind::Discrete(3),
                max_steps: 200,
            },
        }
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for MountainCar {
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
        let a = action.discrete().unwrap_or(1) as f64;
        let mut position = vars[0];
        let mut velocity = vars[1];
        velocity += (a - 1.0) * FORCE + (3.0 * position).cos() * (-GRAVITY);
        velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
        position += velocity;
        position = position.clamp(MIN_POSITION, MAX_POSITION);
        if position == MIN_POSITION && velocity < 0.0 {
            velocity = 0.0;
        }
        let terminated = position >= GOAL_POSITION && velocity >= 0.0;
        Transition {
            vars: vec![position, velocity],
            reward: -1.0,
            terminated,
        }
    }
}
