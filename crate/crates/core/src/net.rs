//! Fixed-topology recurrent networks: forward pass and Gaussian mutation.
//!
//! Dense hidden layers use ReLU, the single recurrent hidden layer uses
//! `tanh(W·x + U·h + b)`, and the output layer is ReLU. Clipping and argmax
//! decoding belong to the consumers of the output.
//!
//! Parameter layout, layer by layer from input to output: `W` row-major
//! (`out × in`), then `U` row-major (`out × out`) for the recurrent layer,
//! then the bias `b` (`out`).

use std::sync::atomic::{AtomicU64, Ordering};

use rand_distr::{Distribution, StandardNormal};

use crate::codec::{Reader, Writer};
use crate::error::{contract, Error, Result};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetTopology {
    input_dim: usize,
    hidden_dims: Vec<usize>,
    output_dim: usize,
    recurrent_layer: usize,
}

impl NetTopology {
    /// `recurrent_layer` indexes `hidden_dims`. Exactly one hidden layer must
    /// be recurrent, so `None` is rejected.
    pub fn new(
        input_dim: usize,
        hidden_dims: Vec<usize>,
        output_dim: usize,
        recurrent_layer: Option<usize>,
    ) -> Result<Self> {
        let recurrent_layer = recurrent_layer.ok_or_else(|| {
            Error::Topology("topology requires exactly one recurrent hidden layer".into())
        })?;
        if hidden_dims.is_empty() {
            return Err(Error::Topology("at least one hidden layer is required".into()));
        }
        if recurrent_layer >= hidden_dims.len() {
            return Err(Error::Topology(format!(
                "recurrent layer index {recurrent_layer} does not address one of {} hidden layers",
                hidden_dims.len()
            )));
        }
        if input_dim == 0 || output_dim == 0 || hidden_dims.contains(&0) {
            return Err(Error::Topology("all layer dimensions must be >= 1".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dims,
            output_dim,
            recurrent_layer,
        })
    }

    /// `(input, [50, 50], output)` with the last hidden layer recurrent.
    pub fn standard(input_dim: usize, output_dim: usize) -> Self {
        Self::new(input_dim, vec![50, 50], output_dim, Some(1)).expect("valid standard topology")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.hidden_dims
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn recurrent_layer(&self) -> usize {
        self.recurrent_layer
    }

    pub fn recurrent_dim(&self) -> usize {
        self.hidden_dims[self.recurrent_layer]
    }

    /// Total weights and biases.
    pub fn param_count(&self) -> usize {
        self.layers().map(|l| l.param_count()).sum()
    }

    fn layers(&self) -> impl Iterator<Item = Layer> + '_ {
        let dims: Vec<usize> = std::iter::once(self.input_dim)
            .chain(self.hidden_dims.iter().copied())
            .chain(std::iter::once(self.output_dim))
            .collect();
        let n = dims.len() - 1;
        let rec = self.recurrent_layer;
        (0..n).map(move |i| Layer {
            fan_in: dims[i],
            fan_out: dims[i + 1],
            recurrent: i == rec,
        })
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        w.len_u32(self.input_dim);
        w.len_u32(self.hidden_dims.len());
        for &h in &self.hidden_dims {
            w.len_u32(h);
        }
        w.len_u32(self.output_dim);
        w.len_u32(self.recurrent_layer);
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let input = r.u32()? as usize;
        let n_hidden = r.length_prefix()?;
        let hidden = (0..n_hidden)
            .map(|_| r.u32().map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let output = r.u32()? as usize;
        let rec = r.u32()? as usize;
        Self::new(input, hidden, output, Some(rec)).map_err(|e| Error::Corrupt(e.to_string()))
    }
}

#[derive(Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    recurrent: bool,
}

impl Layer {
    fn param_count(&self) -> usize {
        let rec = if self.recurrent {
            self.fan_out * self.fan_out
        } else {
            0
        };
        self.fan_in * self.fan_out + rec + self.fan_out
    }
}

static NEXT_LINEAGE: AtomicU64 = AtomicU64::new(1 << 63);

#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    topology: NetTopology,
    params: Vec<f64>,
    lineage_id: u64,
}

impl Genome {
    /// All-zero genome with a fresh process-unique lineage id.
    pub fn zeros(topology: NetTopology) -> Self {
        let id = NEXT_LINEAGE.fetch_add(1, Ordering::Relaxed);
        Self::zeros_with_lineage(topology, id)
    }

    pub fn zeros_with_lineage(topology: NetTopology, lineage_id: u64) -> Self {
        let n = topology.param_count();
        Self {
            topology,
            params: vec![0.0; n],
            lineage_id,
        }
    }

    pub fn from_params(topology: NetTopology, params: Vec<f64>, lineage_id: u64) -> Result<Self> {
        if params.len() != topology.param_count() {
            return Err(contract(format!(
                "genome has {} params, topology needs {}",
                params.len(),
                topology.param_count()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(contract("genome parameters must be finite"));
        }
        Ok(Self {
            topology,
            params,
            lineage_id,
        })
    }

    pub fn topology(&self) -> &NetTopology {
        &self.topology
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn lineage_id(&self) -> u64 {
        self.lineage_id
    }

    pub fn with_lineage(mut self, lineage_id: u64) -> Self {
        self.lineage_id = lineage_id;
        self
    }

    pub fn initial_state(&self) -> HiddenState {
        HiddenState::zeros(self.topology.recurrent_dim())
    }

    /// One timestep. Updates `state` in place and returns the output layer.
    pub fn step(&self, input: &[f64], state: &mut HiddenState) -> Result<Vec<f64>> {
        if input.len() != self.topology.input_dim {
            return Err(contract(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.topology.input_dim
            )));
        }
        if state.values.len() != self.topology.recurrent_dim() {
            return Err(contract(format!(
                "hidden state has {} entries, recurrent layer has {}",
                state.values.len(),
                self.topology.recurrent_dim()
            )));
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(contract("network input must be finite"));
        }

        let mut x = input.to_vec();
        let mut offset = 0;
        for layer in self.topology.layers() {
            let w = &self.params[offset..offset + layer.fan_in * layer.fan_out];
            offset += w.len();
            let mut y: Vec<f64> = w.chunks_exact(layer.fan_in).map(|row| dot(row, &x)).collect();
            if layer.recurrent {
                let u = &self.params[offset..offset + layer.fan_out * layer.fan_out];
                offset += u.len();
                for (yi, row) in y.iter_mut().zip(u.chunks_exact(layer.fan_out)) {
                    *yi += dot(row, &state.values);
                }
            }
            let b = &self.params[offset..offset + layer.fan_out];
            offset += b.len();
            if layer.recurrent {
                for (yi, bi) in y.iter_mut().zip(b) {
                    *yi = (*yi + bi).tanh();
                }
                state.values.copy_from_slice(&y);
            } else {
                for (yi, bi) in y.iter_mut().zip(b) {
                    *yi = (*yi + bi).max(0.0);
                }
            }
            x = y;
        }
        debug_assert_eq!(offset, self.params.len());
        Ok(x)
    }

    /// Pure form of [`Genome::step`].
    pub fn forward(&self, input: &[f64], state: &HiddenState) -> Result<(Vec<f64>, HiddenState)> {
        let mut next = state.clone();
        let out = self.step(input, &mut next)?;
        Ok((out, next))
    }

    /// Adds independent `N(0, sigma²)` noise to every parameter. The result
    /// depends only on `(self, seed, sigma)`.
    pub fn mutate(&self, seed: u64, sigma: f64) -> Result<Genome> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(contract(format!("mutation sigma must be finite and >= 0, got {sigma}")));
        }
        let mut rng = seeds::rng(seed);
        let params = self
            .params
            .iter()
            .map(|&p| {
                let z: f64 = StandardNormal.sample(&mut rng);
                p + sigma * z
            })
            .collect();
        Ok(Genome {
            topology: self.topology.clone(),
            params,
            lineage_id: seeds::splitmix64(seed),
        })
    }

    /// Topology header followed by the little-endian `f64` parameters.
    pub fn encode(&self, w: &mut Writer) {
        self.topology.encode(w);
        w.f64s(&self.params);
    }

    pub fn decode(r: &mut Reader<'_>, lineage_id: u64) -> Result<Genome> {
        let topology = NetTopology::decode(r)?;
        let params = r.f64s(topology.param_count())?;
        Genome::from_params(topology, params, lineage_id).map_err(|e| Error::Corrupt(e.to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Genome> {
        let mut r = Reader::new(bytes);
        let g = Genome::decode(&mut r, 0)?;
        r.finish()?;
        Ok(g)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    values: Vec<f64>,
}

impl HiddenState {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn reset(&mut self) {
        self.values.fill(0.0);
    }
}
