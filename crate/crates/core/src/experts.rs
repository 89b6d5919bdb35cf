//! Scripted expert controllers, one per environment, registered by
//! environment. Their episodes are the target behaviour the generators are
//! evolved to imitate.
//!
//! All gains are fixed constants. Changing them changes the target
//! distribution of every run.

use crate::envs::{self, Action, EnvId, Environment};
use crate::error::{contract, Result};
use crate::trace::{rollout, Actor, EpisodeTrace};

pub trait ExpertPolicy: Actor + Send {
    fn env_id(&self) -> EnvId;
}

/// The built-in expert for `env`.
pub fn for_env(env: EnvId) -> Box<dyn ExpertPolicy> {
    match env {
        EnvId::CartPole => Box::new(CartPoleExpert),
        EnvId::MountainCar => Box::new(MountainCarExpert::default()),
        EnvId::MountainCarContinuous => Box::new(MountainCarContinuousExpert),
        EnvId::Pendulum => Box::new(PendulumExpert),
        EnvId::Acrobot => Box::new(AcrobotExpert),
    }
}

pub fn by_name(name: &str) -> Result<Box<dyn ExpertPolicy>> {
    Ok(for_env(name.parse()?))
}

/// Runs one full expert-controlled episode.
pub fn expert_rollout(
    policy: &mut dyn ExpertPolicy,
    env: &dyn Environment,
    seed: u64,
) -> Result<EpisodeTrace> {
    if policy.env_id() != env.spec().env_id {
        return Err(contract(format!(
            "{} expert cannot drive {}",
            policy.env_id(),
            env.spec().env_id
        )));
    }
    rollout(env, policy, seed)
}

fn check_dim(obs: &[f64], env: EnvId, dim: usize) -> Result<()> {
    if obs.len() != dim {
        return Err(contract(format!(
            "{env} expert expects {dim} observation entries, got {}",
            obs.len()
        )));
    }
    Ok(())
}

/// Linear state feedback; pushes right when `K·(x, ẋ, θ, θ̇) > 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CartPoleExpert;

impl CartPoleExpert {
    pub const GAINS: [f64; 4] = [0.5, 1.0, 20.0, 3.0];
}

impl Actor for CartPoleExpert {
    fn reset(&mut self) {}

    fn act(&mut self, obs: &[f64]) -> Result<Action> {
        check_dim(obs, EnvId::CartPole, 4)?;
        let u: f64 = Self::GAINS.iter().zip(obs).map(|(k, x)| k * x).sum();
        Ok(Action::Discrete(usize::from(u > 0.0)))
    }
}

impl ExpertPolicy for CartPoleExpert {
    fn env_id(&self) -> EnvId {
        EnvId::CartPole
    }
}

/// Bang-bang energy pumping with a planned opening.
///
/// On the first observation of an episode the controller searches the
/// opening `first × h₁, opposite × h₂` (each hold up to
/// [`MountainCarExpert::MAX_HOLD`] steps) followed by thrust along the
/// velocity, simulating each candidate on the car's own dynamics, and keeps
/// the one that reaches the goal soonest. Ties keep the earliest candidate
/// in `(first ∈ {left, right}, h₁, h₂)` order.
#[derive(Debug, Clone, Default)]
pub struct MountainCarExpert {
    plan: Option<OpeningPlan>,
    t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct OpeningPlan {
    first: usize,
    hold: usize,
    counter_hold: usize,
}

impl OpeningPlan {
    fn action(&self, t: usize, velocity: f64) -> usize {
        if t < self.hold {
            self.first
        } else if t < self.hold + self.counter_hold {
            2 - self.first
        } else if velocity > 0.0 {
            2
        } else {
            0
        }
    }
}

impl MountainCarExpert {
    pub const MAX_HOLD: usize = 60;
    const PLAN_HORIZON: usize = 200;

    fn plan(start: &[f64]) -> OpeningPlan {
        let model = envs::MountainCar::new();
        let mut best = (usize::MAX, OpeningPlan { first: 0, hold: 0, counter_hold: 0 });
        for first in [0, 2] {
            for hold in 0..Self::MAX_HOLD {
                for counter_hold in 0..Self::MAX_HOLD {
                    let plan = OpeningPlan { first, hold, counter_hold };
                    let mut vars = start.to_vec();
                    for t in 0..Self::PLAN_HORIZON.min(best.0) {
                        let step = model.transition(&vars, &Action::Discrete(plan.action(t, vars[1])));
                        vars = step.vars;
                        if step.terminated {
                            if t + 1 < best.0 {
                                best = (t + 1, plan);
                            }
                            break;
                        }
                    }
                }
            }
        }
        best.1
    }
}

impl Actor for MountainCarExpert {
    fn reset(&mut self) {
        self.plan = None;
        self.t = 0;
    }

    fn act(&mut self, obs: &[f64]) -> Result<Action> {
        check_dim(obs, EnvId::MountainCar, 2)?;
        let plan = *self.plan.get_or_insert_with(|| Self::plan(obs));
        let a = plan.action(self.t, obs[1]);
        self.t += 1;
        Ok(Action::Discrete(a))
    }
}

impl ExpertPolicy for MountainCarExpert {
    fn env_id(&self) -> EnvId {
        EnvId::MountainCar
    }
}

/// Full thrust along the velocity, left when at rest.
#[derive(Debug, Clone, Copy, Default)]
pub struct MountainCarContinuousExpert;

impl Actor for MountainCarContinuousExpert {
    fn reset(&mut self) {}

    fn act(&mut self, obs: &[f64]) -> Result<Action> {
        check_dim(obs, EnvId::MountainCarContinuous, 2)?;
        let u = if obs[1] > 0.0 { 1.0 } else { -1.0 };
        Ok(Action::Continuous(vec![u]))
    }
}

impl ExpertPolicy for MountainCarContinuousExpert {
    fn env_id(&self) -> EnvId {
        EnvId::MountainCarContinuous
    }
}

/// Energy-shaping swing-up, PD stabilization near upright.
///
/// With θ = 0 upright the dynamics are `θ̈ = 15 sin θ + 3u`, so
/// `E = ½θ̇² + 15 cos θ` equals 15 at upright rest and `dE/dt = 3uθ̇`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PendulumExpert;

impl PendulumExpert {
    pub const ENERGY_GAIN: f64 = 0.5;
    pub const KP: f64 = 10.0;
    pub const KD: f64 = 2.0;
    /// Switch to the stabilizer when `cos θ` exceeds this.
    pub const CAPTURE_COS: f64 = 0.85;
    pub const TARGET_ENERGY: f64 = 15.0;
}

impl Actor for PendulumExpert {
    fn reset(&mut self) {}

    fn act(&mut self, obs: &[f64]) -> Result<Action> {
        check_dim(obs, EnvId::Pendulum, 3)?;
        let (cos, sin, thdot) = (obs[0], obs[1], obs[2]);
        let theta = sin.atan2(cos);
        let u = if cos > Self::CAPTURE_COS {
            -(Self::KP * theta + Self::KD * thdot)
        } else {
            let energy = 0.5 * thdot * thdot + 15.0 * cos;
            Self::ENERGY_GAIN * (Self::TARGET_ENERGY - energy) * thdot
        };
        let limit = envs::pendulum::MAX_TORQUE;
        Ok(Action::Continuous(vec![u.clamp(-limit, limit)]))
    }
}

impl ExpertPolicy for PendulumExpert {
    fn env_id(&self) -> EnvId {
        EnvId::Pendulum
    }
}

/// Energy pumping: torque against the first link's angular velocity, none
/// when it is exactly zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcrobotExpert;

impl Actor for AcrobotExpert {
    fn reset(&mut self) {}

    fn act(&mut self, obs: &[f64]) -> Result<Action> {
        check_dim(obs, EnvId::Acrobot, 6)?;
        let dtheta1 = obs[4];
        let a = if dtheta1 < 0.0 {
            2
        } else if dtheta1 > 0.0 {
            0
        } else {
            1
        };
        Ok(Action::Discrete(a))
    }
}

impl ExpertPolicy for AcrobotExpert {
    fn env_id(&self) -> EnvId {
        EnvId::Acrobot
    }
}
