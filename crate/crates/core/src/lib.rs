pub mod codec;
pub mod coevo;
pub mod envs;
pub mod error;
pub mod experts;
pub mod metrics;
pub mod net;
pub mod runkit;
pub mod seeds;
pub mod standardize;
pub mod trace;

pub use error::{Error, Result};
