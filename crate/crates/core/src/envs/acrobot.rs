//! Two-link acrobot swing-up.
//!
//! Constants: link lengths 1, masses 1, centres of mass at 0.5, moments of
//! inertia 1, g 9.8, Δt 0.2 integrated with one classical RK4 step, joint
//! speed limits 4π and 9π, torques `{-1, 0, +1}`. Terminates when the tip
//! rises above one link length over the pivot, `-cos θ₁ - cos(θ₁+θ₂) > 1`.
//! Reward −1 per step and 0 on the terminating step. Initial state uniform
//! in `[-0.1, 0.1)⁴`.
//!
//! State order `(θ₁, θ₂, θ̇₁, θ̇₂)`; observation
//! `(cos θ₁, sin θ₁, cos θ₂, sin θ₂, θ̇₁, θ̇₂)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionKind, EnvId, EnvSpec, Environment, Transition};

pub const DT: f64 = 0.2;
pub const LINK_LENGTH_1: f64 = 1.0;
pub const LINK_MASS_1: f64 = 1.0;
pub const LINK_MASS_2: f64 = 1.0;
pub const LINK_COM_1: f64 = 0.5;
pub const LINK_COM_2: f64 = 0.5;
pub const LINK_MOI: f64 = 1.0;
pub const GRAVITY: f64 = 9.8;
pub const MAX_VEL_1: f64 = 4.0 * PI;
pub const MAX_VEL_2: f64 = 9.0 * PI;
pub const TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];

pub struct Acrobot {
    spec: EnvSpec,
}

impl Acrobot {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                env_id: EnvId::Acrobot,
                obs_dim: 6,
                action_kind: ActionKind::Discrete(3),
                max_steps: 500,
            },
        }
    }
}

impl Default for Acrobot {
    fn default() -> Self {
        Self::new()
    }
}

type State4 = [f64; 4];

fn derivatives(s: &State4, torque: f64) -> State4 {
    let (m1, m2) = (LINK_MASS_1, LINK_MASS_2);
    let (l1, lc1, lc2) = (LINK_LENGTH_1, LINK_COM_1, LINK_COM_2);
    let (i1, i2) = (LINK_MOI, LINK_MOI);
    let g = GRAVITY;
    let [theta1, theta2, dtheta1, dtheta2] = *s;

    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (torque + d2 / d1 * phi1
        - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin()
        - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn rk4(s: &State4, torque: f64, dt: f64) -> State4 {
    let add = |a: &State4, k: &State4, h: f64| -> State4 {
        [a[0] + h * k[0], a[1] + h * k[1], a[2] + h * k[2], a[3] + h * k[3]]
    };
    let k1 = derivatives(s, torque);
    let k2 = derivatives(&add(s, &k1, dt / 2.0), torque);
    let k3 = derivatives(&add(s, &k2, dt / 2.0), torque);
    let k4 = derivatives(&add(s, &k3, dt), torque);
    let mut out = *s;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Wraps into `[lo, hi]` by whole periods.
pub fn wrap(mut x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    while x > hi {
        x -= span;
    }
    while x < lo {
        x += span;
    }
    x
}

pub fn tip_height(theta1: f64, theta2: f64) -> f64 {
    -theta1.cos() - (theta1 + theta2).cos()
}

impl Environment for Acrobot {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_vars(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..4).map(|_| rng.random_range(-0.1..0.1)).collect()
    }

    fn observe(&self, vars: &[f64]) -> Vec<f64> {
        let (s1, c1) = vars[0].sin_cos();
        let (s2, c2) = vars[1].sin_cos();
        vec![c1, s1, c2, s2, vars[2], vars[3]]
    }

    fn transition(&self, vars: &[f64], action: &Action) -> Transition {
        let torque = TORQUES[action.discrete().unwrap_or(1)];
        let s = [vars[0], vars[1], vars[2], vars[3]];
        let ns = rk4(&s, torque, DT);
        let next = vec![
            wrap(ns[0], -PI, PI),
            wrap(ns[1], -PI, PI),
            ns[2].clamp(-MAX_VEL_1, MAX_VEL_1),
            ns[3].clamp(-MAX_VEL_2, MAX_VEL_2),
        ];
        let terminated = tip_height(next[0], next[1]) > 1.0;
        Transition {
            vars: next,
            reward: if terminated { 0.0 } else { -1.0 },
            terminated,
        }
    }
}
