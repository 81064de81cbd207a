//! Nested Monte Carlo estimator: an outer loop over fixed values of one
//! input and an inner sample of the remaining inputs for each.

use rayon::prelude::*;

use super::{assemble, check_tail_sizes, AlphaGrid, Provenance, QbsmReport, QuantileMethod};
use crate::distributions::InputMatrix;
use crate::empirical::quantiles_of_sorted;
use crate::error::{invalid, Error, Result};
use crate::models::ModelSpec;
use crate::sampling::{PointSet, SamplerConfig};

/// Pseudorandom stream used for the outer (conditioning) values.
const OUTER_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceConfig {
    n_outer: usize,
    n_inner: usize,
    sampler: SamplerConfig,
}

impl BruteForceConfig {
    pub fn new(n_outer: usize, n_inner: usize, sampler: SamplerConfig) -> Result<Self> {
        if n_outer < 2 || n_inner < 2 {
            return Err(invalid(format!(
                "brute force needs n_outer >= 2 and n_inner >= 2 (got {n_outer}, {n_inner})"
            )));
        }
        Ok(Self {
            n_outer,
            n_inner,
            sampler,
        })
    }

    /// Square configuration `n_outer = n_inner = n` with the largest `n`
    /// whose cost `d n^2 + n` fits in `budget` evaluations.
    pub fn for_budget(budget: u64, d: usize, sampler: SamplerConfig) -> Result<Self> {
        let cost = |n: u64| d as u64 * n * n + n;
        let mut n = ((budget as f64 / d as f64).sqrt().floor() as u64).max(1);
        while n > 1 && cost(n) > budget {
            n -= 1;
        }
        while cost(n + 1) <= budget {
            n += 1;
        }
        Self::new(n as usize, n as usize, sampler)
    }

    pub fn n_outer(&self) -> usize {
        self.n_outer
    }

    pub fn n_inner(&self) -> usize {
        self.n_inner
    }

    pub fn sampler(&self) -> SamplerConfig {
        self.sampler
    }

    pub fn evaluations(&self, d: usize) -> u64 {
        (d * self.n_outer * self.n_inner + self.n_inner) as u64
    }
}

/// Unconditional quantiles from a base sample; for each input and each
/// outer value, conditional quantiles from the base sample's other
/// coordinates with that input fixed (independent inputs) or drawn from
/// the Gaussian conditional law (correlated inputs).
pub fn brute_force_qbsm(
    model: &ModelSpec,
    grid: &AlphaGrid,
    cfg: &BruteForceConfig,
) -> Result<QbsmReport> {
    let spec = model.inputs();
    let d = model.d();
    if spec.is_correlated() && !spec.all_normal() {
        return Err(Error::NonGaussianConditioning);
    }
    let warnings = check_tail_sizes(grid, cfg.n_inner)?;

    let base_u = cfg.sampler.points(cfg.n_inner, d)?;
    let base = spec.transform(&base_u)?;
    let mut base_y = model.evaluate_batch(&base)?;
    base_y.sort_unstable_by(f64::total_cmp);
    let q_unconditional = quantiles_of_sorted(&base_y, grid.values());

    let outer_u = cfg.sampler.stream(cfg.n_outer, d, OUTER_STREAM)?;
    let outer: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let m = &spec.marginals()[i];
            outer_u
                .column(i)
                .into_iter()
                .map(|u| m.inv_cdf(u))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, f64)> = (0..d)
        .flat_map(|i| outer[i].iter().map(move |&v| (i, v)))
        .collect();
    let quantiles: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(i, value)| {
            let inner = if spec.is_correlated() {
                conditional_inner(model, &base_u, i, value)?
            } else {
                base.with_column_fixed(i, value)
            };
            let mut y = inner
                .rows()
                .map(|row| model.evaluate(row))
                .collect::<Result<Vec<f64>>>()?;
            if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite { index, value });
            }
            y.sort_unstable_by(f64::total_cmp);
            Ok(quantiles_of_sorted(&y, grid.values()))
        })
        .collect::<Result<_>>()?;

    let mut per_input: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(cfg.n_outer); d];
    for ((i, _), q) in tasks.into_iter().zip(quantiles) {
        per_input[i].push(q);
    }
    let provenance = Provenance {
        model: model.name().to_string(),
        method: QuantileMethod::BruteForce,
        sampler: cfg.sampler,
        n: None,
        bins: None,
        n_outer: Some(cfg.n_outer),
        n_inner: Some(cfg.n_inner),
        conditional_size: cfg.n_inner,
        evaluations: cfg.evaluations(d),
        warnings,
    };
    assemble(
        grid,
        &q_unconditional,
        &per_input,
        model.input_names().to_vec(),
        provenance,
    )
}

/// Inner sample under dependence: the base uniforms of the other inputs are
/// pushed through the conditional Gaussian law given `x_i = value`.
fn conditional_inner(
    model: &ModelSpec,
    base_u: &PointSet,
    i: usize,
    value: f64,
) -> Result<InputMatrix> {
    let d = model.d();
    let cond = model.inputs().conditional_gaussian(i, value)?;
    let others: Vec<f64> = base_u
        .rows()
        .flat_map(|r| {
            r.iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, &u)| u)
        })
        .collect();
    let rest = cond.transform(&PointSet::from_raw(base_u.n(), d - 1, others))?;
    let values = rest
        .rows()
        .flat_map(|r| {
            let mut row = Vec::with_capacity(d);
            row.extend_from_slice(&r[..i]);
            row.push(value);
            row.extend_from_slice(&r[i..]);
            row
        })
        .collect();
    Ok(InputMatrix::from_raw(base_u.n(), d, values))
}
