//! Binary checkpoint format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    b"IMEVCKPT"
//! version  u32
//! config   u32 length + UTF-8 config text (no output_dir)
//! state    generation u64, holdout seeds, match-seed ledger, elite slots,
//!          running stats, generator population, discriminator population
//! history  score reports
//! elites   captured elite genomes with their standardizer snapshots
//! digest   SHA-256 of every preceding byte
//! ```
//!
//! Genomes are stored as a `u64` lineage id followed by the topology header
//! (`u32` input dim, `u32` hidden count, `u32` per hidden dim, `u32` output
//! dim, `u32` recurrent index) and the `f64` parameters. Running stats are a
//! `u32` dim, `u64` count, then mean and m2 as `f64` arrays.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::codec::{Reader, Writer};
use crate::coevo::{Population, PopulationTag, RunState};
use crate::error::{Error, Result};
use crate::metrics::ScoreReport;
use crate::net::Genome;
use crate::standardize::RunningStats;

use super::config::RunConfig;

pub const MAGIC: &[u8; 8] = b"IMEVCKPT";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

/// An elite generator captured at one of the trajectory fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct EliteSnapshot {
    /// One-based generation the elite was evaluated in.
    pub generation: u64,
    pub genome: Genome,
    pub stats: RunningStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub state: RunState,
    pub history: Vec<ScoreReport>,
    pub elites: Vec<EliteSnapshot>,
}

fn encode_genome(w: &mut Writer, g: &Genome) {
    w.u64(g.lineage_id());
    g.encode(w);
}

fn decode_genome(r: &mut Reader<'_>) -> Result<Genome> {
    let lineage = r.u64()?;
    Genome::decode(r, lineage)
}

fn encode_population(w: &mut Writer, p: &Population) {
    w.len_u32(p.members.len());
    for g in &p.members {
        encode_genome(w, g);
    }
}

fn decode_population(r: &mut Reader<'_>, tag: PopulationTag, generation: u64) -> Result<Population> {
    let n = r.length_prefix()?;
    let members = (0..n).map(|_| decode_genome(r)).collect::<Result<Vec<_>>>()?;
    Ok(Population {
        tag,
        members,
        generation,
    })
}

fn encode_u64s(w: &mut Writer, xs: &[u64]) {
    w.len_u32(xs.len());
    for &x in xs {
        w.u64(x);
    }
}

fn decode_u64s(r: &mut Reader<'_>) -> Result<Vec<u64>> {
    let n = r.length_prefix()?;
    (0..n).map(|_| r.u64()).collect()
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(MAGIC);
        w.u32(FORMAT_VERSION);
        w.bytes(self.config.payload_text().as_bytes());

        let s = &self.state;
        w.u64(s.generation);
        encode_u64s(&mut w, &s.holdout_seeds);
        encode_u64s(&mut w, &s.match_seeds);
        match s.elites {
            Some((g, d)) => {
                w.u32(1);
                w.len_u32(g);
                w.len_u32(d);
            }
            None => w.u32(0),
        }
        s.stats.encode(&mut w);
        encode_population(&mut w, &s.generators);
        encode_population(&mut w, &s.discriminators);

        w.len_u32(self.history.len());
        for rep in &self.history {
            w.u64(rep.generation);
            w.f64(rep.elite_score);
            w.f64(rep.population_mean_score);
            w.len_u32(rep.member_scores.len());
            w.f64s(&rep.member_scores);
        }

        w.len_u32(self.elites.len());
        for e in &self.elites {
            w.u64(e.generation);
            e.stats.encode(&mut w);
            encode_genome(&mut w, &e.genome);
        }

        let mut bytes = w.into_inner();
        let digest = Sha256::digest(&bytes);
        bytes.extend_from_slice(&digest);
        bytes
    }

    /// Parses a checkpoint. The format version is checked before anything
    /// else is interpreted; the digest is checked before any state is built.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Corrupt("not a checkpoint file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        if bytes.len() < 12 + DIGEST_LEN {
            return Err(Error::Corrupt("truncated checkpoint".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Corrupt("digest mismatch".into()));
        }

        let mut r = Reader::new(&body[12..]);
        let text = std::str::from_utf8(r.bytes()?)
            .map_err(|_| Error::Corrupt("config is not UTF-8".into()))?;
        let config = RunConfig::parse(text).map_err(|e| Error::Corrupt(e.to_string()))?;

        let generation = r.u64()?;
        let holdout_seeds = decode_u64s(&mut r)?;
        let match_seeds = decode_u64s(&mut r)?;
        let elites = match r.u32()? {
            0 => None,
            1 => Some((r.u32()? as usize, r.u32()? as usize)),
            other => return Err(Error::Corrupt(format!("bad elite flag {other}"))),
        };
        let stats = RunningStats::decode(&mut r)?;
        let generators = decode_population(&mut r, PopulationTag::Generator, generation)?;
        let discriminators = decode_population(&mut r, PopulationTag::Discriminator, generation)?;

        let n = r.length_prefix()?;
        let mut history = Vec::with_capacity(n);
        for _ in 0..n {
            let generation = r.u64()?;
            let elite_score = r.f64()?;
            let population_mean_score = r.f64()?;
            let m = r.length_prefix()?;
            let member_scores = r.f64s(m)?;
            history.push(ScoreReport {
                generation,
                elite_score,
                population_mean_score,
                member_scores,
                holdout_seeds: holdout_seeds.clone(),
            });
        }

        let n = r.length_prefix()?;
        let mut elite_snaps = Vec::with_capacity(n);
        for _ in 0..n {
            let generation = r.u64()?;
            let stats = RunningStats::decode(&mut r)?;
            let genome = decode_genome(&mut r)?;
            elite_snaps.push(EliteSnapshot {
                generation,
                genome,
                stats,
            });
        }
        r.finish()?;

        if generators.len() != config.population_size || discriminators.len() != config.population_size {
            return Err(Error::Corrupt("population size disagrees with config".into()));
        }
        if holdout_seeds.len() != config.holdout_seed_count {
            return Err(Error::Corrupt("holdout seed count disagrees with config".into()));
        }
        if match_seeds.len() as u64 != generation {
            return Err(Error::Corrupt("seed ledger length disagrees with generation".into()));
        }

        let state = RunState {
            env_id: config.env,
            run_seed: config.run_seed,
            generation,
            generators,
            discriminators,
            stats,
            match_seeds,
            holdout_seeds,
            elites,
        };
        Ok(Self {
            config,
            state,
            history,
            elites: elite_snaps,
        })
    }

    /// Writes `path` atomically and a `<path>.sha256` sidecar holding the
    /// hex SHA-256 of the file. Returns the hex digest.
    pub fn save(&self, path: &Path) -> Result<String> {
        let bytes = self.to_bytes();
        let hash = hex::encode(Sha256::digest(&bytes));
        let tmp = path.with_extension("bin.tmp");
        fs::write(&tmp, &bytes)?;
        fs::rename(&tmp, path)?;
        fs::write(sidecar_path(path), format!("{hash}\n"))?;
        Ok(hash)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)
            .map_err(|e| Error::Missing(format!("cannot read checkpoint {}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sha256");
    s.into()
}
