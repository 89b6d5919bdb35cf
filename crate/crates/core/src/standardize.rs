//! Running per-dimension observation standardization.
//!
//! Welford's single-pass update for streaming samples and Chan et al.'s
//! pairwise combination for merging accumulators built in parallel.

use crate::codec::{Reader, Writer};
use crate::error::{contract, Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningStats {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn m2(&self) -> &[f64] {
        &self.m2
    }

    /// Population variance `m2 / count`; zero when empty.
    pub fn variance(&self) -> Vec<f64> {
        if self.count == 0 {
            return vec![0.0; self.dim()];
        }
        let n = self.count as f64;
        self.m2.iter().map(|m| m / n).collect()
    }

    pub fn update(&mut self, observation: &[f64]) -> Result<()> {
        if observation.len() != self.dim() {
            return Err(contract(format!(
                "observation has {} entries, stats track {}",
                observation.len(),
                self.dim()
            )));
        }
        if observation.iter().any(|x| !x.is_finite()) {
            return Err(contract("observation must be finite"));
        }
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(observation) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
        Ok(())
    }

    /// `(x − mean) / max(std, 1e-8)`; the zero vector before any update.
    pub fn apply(&self, observation: &[f64]) -> Result<Vec<f64>> {
        if observation.len() != self.dim() {
            return Err(contract(format!(
                "observation has {} entries, stats track {}",
                observation.len(),
                self.dim()
            )));
        }
        if self.count == 0 {
            return Ok(vec![0.0; self.dim()]);
        }
        let n = self.count as f64;
        Ok(observation
            .iter()
            .zip(self.mean.iter().zip(&self.m2))
            .map(|(&x, (&mean, &m2))| (x - mean) / (m2 / n).sqrt().max(STD_FLOOR))
            .collect())
    }

    /// Combines two accumulators as if their sample streams were
    /// concatenated.
    pub fn merge(&self, other: &RunningStats) -> Result<RunningStats> {
        if self.dim() != other.dim() {
            return Err(contract(format!(
                "cannot merge stats of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        if other.count == 0 {
            return Ok(self.clone());
        }
        if self.count == 0 {
            return Ok(other.clone());
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let mut out = RunningStats::new(self.dim());
        out.count = self.count + other.count;
        for i in 0..self.dim() {
            let delta = other.mean[i] - self.mean[i];
            out.mean[i] = self.mean[i] + delta * nb / n;
            out.m2[i] = self.m2[i] + other.m2[i] + delta * delta * na * nb / n;
        }
        Ok(out)
    }

    pub fn merge_in(&mut self, other: &RunningStats) -> Result<()> {
        *self = self.merge(other)?;
        Ok(())
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        w.len_u32(self.dim());
        w.u64(self.count);
        w.f64s(&self.mean);
        w.f64s(&self.m2);
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let dim = r.length_prefix()?;
        let count = r.u64()?;
        let mean = r.f64s(dim)?;
        let m2 = r.f64s(dim)?;
        if m2.iter().any(|&v| v.is_nan() || v < 0.0) || mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Corrupt("running stats out of range".into()));
        }
        Ok(Self { count, mean, m2 })
    }
}
