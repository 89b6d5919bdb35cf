//! Shared by the integration tests and the acceptance target. The two
//! oracle modules are written from the equations and never call the
//! crate's dynamics or network code.

#![allow(dead_code)]

pub mod checks;
pub mod physics_oracle;

use imitevo::envs::EnvId;

/// Return of an episode that never reaches the goal and spends no control
/// effort. Used as the zero point when comparing against the expert.
pub fn failure_return(env: EnvId) -> f64 {
    match env {
        EnvId::CartPole | EnvId::MountainCarContinuous => 0.0,
        EnvId::Acrobot => -500.0,
        EnvId::MountainCar => -200.0,
        EnvId::Pendulum => f64::NAN,
    }
}

/// Score needed to count as "90% of the expert": 90% of the way from the
/// failure return to the expert's return. For tasks whose failure return is
/// 0 this is exactly `0.9 * expert`.
pub fn ninety_percent_threshold(env: EnvId, expert: f64) -> f64 {
    let f = failure_return(env);
    f + 0.9 * (expert - f)
}

pub fn long_campaigns_enabled() -> bool {
    std::env::var_os("IMITEVO_SKIP_LONG").is_none()
}
