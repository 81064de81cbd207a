//! Deterministic point sets in the unit hypercube.
//!
//! Two generators are provided: a seeded pseudorandom stream built on the
//! ChaCha8 block function (counter based, so any row can be produced
//! without generating its predecessors) and the Sobol' low-discrepancy
//! sequence. Both produce row-major `n x d` grids with entries in `[0, 1)`;
//! neither ever emits an exact zero, so inverse-CDF transforms downstream
//! stay finite.

mod sobol;

pub use sobol::{sobol_points, MAX_SOBOL_DIM};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Rows generated per parallel work item.
const ROWS_PER_CHUNK: usize = 1024;

/// `n` points of dimension `d` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl PointSet {
    pub(crate) fn from_raw(n: usize, d: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * d);
        Self { n, d, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    /// Copy of column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Pseudorandom,
    SobolSequence,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Pseudorandom => "pseudorandom",
            SamplerKind::SobolSequence => "sobol_sequence",
        }
    }
}

/// Which generator to use and how to seed it.
///
/// `seed` only affects the pseudorandom generator; `skip` only affects the
/// Sobol' sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub seed: u64,
    pub skip: u64,
}

impl SamplerConfig {
    pub fn pseudorandom(seed: u64) -> Self {
        Self {
            kind: SamplerKind::Pseudorandom,
            seed,
            skip: 0,
        }
    }

    pub fn sobol() -> Self {
        Self {
            kind: SamplerKind::SobolSequence,
            seed: 0,
            skip: 0,
        }
    }

    pub fn sobol_skip(skip: u64) -> Self {
        Self {
            kind: SamplerKind::SobolSequence,
            seed: 0,
            skip,
        }
    }

    /// Main point set of this configuration.
    pub fn points(&self, n: usize, d: usize) -> Result<PointSet> {
        self.stream(n, d, 0)
    }

    /// An auxiliary point set that is independent of [`Self::points`] for
    /// pseudorandom sampling. For the Sobol' sequence every stream is the
    /// leading `d` coordinates of the sequence itself.
    pub fn stream(&self, n: usize, d: usize, stream: u64) -> Result<PointSet> {
        match self.kind {
            SamplerKind::Pseudorandom => random_points_on_stream(n, d, self.seed, stream),
            SamplerKind::SobolSequence => sobol_points(n, d, self.skip),
        }
    }
}

/// `n x d` i.i.d. uniform points from the seeded ChaCha8 stream.
///
/// Entry `k` of the row-major grid is derived from block-function words
/// `2k` and `2k + 1`, so the result does not depend on how the work is
/// split across threads.
pub fn random_points(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    random_points_on_stream(n, d, seed, 0)
}

fn random_points_on_stream(n: usize, d: usize, seed: u64, stream: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(invalid(format!(
            "point set needs n >= 1 and d >= 1 (got n = {n}, d = {d})"
        )));
    }
    let mut values = vec![0.0; n * d];
    values
        .par_chunks_mut(ROWS_PER_CHUNK * d)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng.set_word_pos(2 * (chunk * ROWS_PER_CHUNK * d) as u128);
            for v in out.iter_mut() {
                *v = unit_from_bits(rng.next_u64());
            }
        });
    Ok(PointSet::from_raw(n, d, values))
}

/// Midpoint of one of 2^52 equal cells. Both the midpoint and its scaled
/// value are exact in f64, so the result lies strictly inside (0, 1).
fn unit_from_bits(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
