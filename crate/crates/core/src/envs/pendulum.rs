//! Inverted pendulum swing-up.
//!
//! Constants: g 10, mass 1, length 1, Δt 0.05, torque limit 2, speed limit
//! 8. Reward `−(θ̃² + 0.1·θ̇² + 0.001·u²)` on the pre-step state, where θ̃ is
//! θ wrapped into `[-π, π)`. Never terminates. Initial θ uniform in
//! `[-π, π)`, θ̇ uniform in `[-1, 1)`.
//!
//! State order `(θ, θ̇)`, θ = 0 upright; observation `(cos θ, sin θ, θ̇)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionKind, EnvId, EnvSpec, Environment, Transition};

pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_TORQUE: f64 = 2.0;
pub const MAX_SPEED: f64 = 8.0;

pub struct Pendulum {
    spec: EnvSpec,
}

impl Pendulum {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                env_id: EnvId::Pendulum,
                obs_dim: 3,
                action_kind: ActionKind::Continuous {
                    low: vec![-MAX_TORQUE],
                    high: vec![MAX_TORQUE],
                },
                max_steps: 200,
            },
        }
    }
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn angle_normalize(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_vars(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.random_range(-PI..PI), rng.random_range(-1.0..1.0)]
    }

    fn observe(&self, vars: &[f64]) -> Vec<f64> {
        let (sin, cos) = vars[0].sin_cos();
        vec![cos, sin, vars[1]]
    }

    fn transition(&self, vars: &[f64], action: &Action) -> Transition {
        let (th, thdot) = (vars[0], vars[1]);
        let u = action
            .continuous()
            .map_or(0.0, |v| v[0])
            .clamp(-MAX_TORQUE, MAX_TORQUE);
        let th_n = angle_normalize(th);
        let cost = th_n * th_n + 0.1 * thdot * thdot + 0.001 * u * u;

        let new_thdot = (thdot
            + (3.0 * GRAVITY / (2.0 * LENGTH) * th.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u) * DT)
            .clamp(-MAX_SPEED, MAX_SPEED);
        let new_th = th + new_thdot * DT;
        Transition {
            vars: vec![new_th, new_thdot],
            reward: -cost,
            terminated: false,
        }
    }
}
