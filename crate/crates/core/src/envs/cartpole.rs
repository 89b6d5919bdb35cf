//! Cart-pole balancing.
//!
//! Constants: gravity 9.8, cart mass 1.0, pole mass 0.1, pole half-length
//! 0.5, force magnitude 10, Δt 0.02 with explicit Euler. Terminates when
//! `|x| > 2.4` or `|θ| > 12°`. Reward +1 on every step, including the
//! terminating one. Initial state uniform in `[-0.05, 0.05]⁴`.
//!
//! State order: `(x, ẋ, θ, θ̇)`, θ = 0 upright, positive leaning right.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionKind, EnvId, EnvSpec, Environment, Transition};

pub const GRAVITY: f64 = 9.8;
pub const MASS_CART: f64 = 1.0;
pub const MASS_POLE: f64 = 0.1;
pub const HALF_LENGTH: f64 = 0.5;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const X_THRESHOLD: f64 = 2.4;

pub struct CartPole {
    spec: EnvSpec,
}

impl CartPole {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                env_id: EnvId::CartPole,
                obs_dim: 4,
                action_kind: ActionKind::Discrete(2),
                max_steps: 500,
            },
        }
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_vars(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..4).map(|_| rng.random_range(-0.05..0.05)).collect()
    }

    fn observe(&self, vars: &[f64]) -> Vec<f64> {
        vars.to_vec()
    }

    fn transition(&self, vars: &[f64], action: &Action) -> Transition {
        let (x, x_dot, theta, theta_dot) = (vars[0], vars[1], vars[2], vars[3]);
        let force = if action.discrete() == Some(1) {
            FORCE_MAG
        } else {
            -FORCE_MAG
        };
        let total_mass = MASS_CART + MASS_POLE;
        let polemass_length = MASS_POLE * HALF_LENGTH;
        let (sin, cos) = theta.sin_cos();

        let temp = (force + polemass_length * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / total_mass));
        let x_acc = temp - polemass_length * theta_acc * cos / total_mass;

        let next = vec![
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        let terminated = next[0] < -X_THRESHOLD
            || next[0] > X_THRESHOLD
            || next[2] < -THETA_THRESHOLD
            || next[2] > THETA_THRESHOLD;
        Transition {
            vars: next,
            reward: 1.0,
            terminated,
        }
    }
}
