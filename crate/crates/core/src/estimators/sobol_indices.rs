//! Variance-based indices: first order from given data by binning, total
//! order by the two-matrix estimator.

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::InputMatrix;
use crate::empirical::mean_variance_of;
use crate::error::{invalid, Error, Result};
use crate::models::ModelSpec;
use crate::sampling::SamplerConfig;

/// Input rows paired with model outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    x: InputMatrix,
    y: Vec<f64>,
}

impl SampleBatch {
    pub fn new(x: InputMatrix, y: Vec<f64>) -> Result<Self> {
        if y.len() != x.n() {
            return Err(Error::DimensionMismatch {
                expected: x.n(),
                got: y.len(),
            });
        }
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { x, y })
    }

    /// `n` points of the model's input law and their outputs.
    pub fn generate(model: &ModelSpec, n: usize, sampler: SamplerConfig) -> Result<Self> {
        let x = model.inputs().transform(&sampler.points(n, model.d())?)?;
        let y = model.evaluate_batch(&x)?;
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &InputMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Typical sampling error of a binned first-order estimate:
/// `(1 + 3 sqrt(2 / m)) / n_m`. The first term is the bias of the
/// between-bin variance, the second three standard errors of it for an
/// input with no effect.
fn binning_noise(m: usize, bin_size: usize) -> f64 {
    (1.0 + 3.0 * (2.0 / m as f64).sqrt()) / bin_size as f64
}

/// `Var(bin means) / Var(Y)` over `m` equally populated bins of the sample
/// ordered by each input. Needs no independence between inputs. Returns the
/// indices and the output variance.
pub fn given_data_first_order(batch: &SampleBatch, m: usize) -> Result<(Vec<f64>, f64)> {
    let n = batch.len();
    if m < 2 || m >= n || !n.is_multiple_of(m) {
        return Err(invalid(format!(
            "bin count M = {m} must be at least 2, below and divide N = {n}"
        )));
    }
    let (_, variance) = mean_variance_of(&batch.y);
    if variance == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let size = n / m;
    let indices = (0..batch.x.d())
        .into_par_iter()
        .map(|i| {
            let column = batch.x.column(i);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
            let means: Vec<f64> = order
                .chunks_exact(size)
                .map(|bin| bin.iter().map(|&k| batch.y[k]).sum::<f64>() / size as f64)
                .collect();
            mean_variance_of(&means).1 / variance
        })
        .collect();
    Ok((indices, variance))
}

/// Total-order indices `sum_j (f(A_j) - f(A_B^i_j))^2 / (2 n V)` where
/// `A_B^i` is `A` with column `i` taken from an independent matrix `B`.
/// Uses `n (d + 2)` evaluations.
pub fn two_matrix_total_order(
    model: &ModelSpec,
    n: usize,
    sampler: SamplerConfig,
) -> Result<(Vec<f64>, f64)> {
    let spec = model.inputs();
    if spec.is_correlated() {
        return Err(Error::CorrelatedTotalOrder);
    }
    let d = model.d();
    let u = sampler.points(n, 2 * d)?;
    let (ua, ub): (Vec<f64>, Vec<f64>) = {
        let mut a = Vec::with_capacity(n * d);
        let mut b = Vec::with_capacity(n * d);
        for row in u.rows() {
            a.extend_from_slice(&row[..d]);
            b.extend_from_slice(&row[d..]);
        }
        (a, b)
    };
    let a = spec.transform(&crate::sampling::PointSet::from_raw(n, d, ua))?;
    let b = spec.transform(&crate::sampling::PointSet::from_raw(n, d, ub))?;
    let ya = model.evaluate_batch(&a)?;
    let yb = model.evaluate_batch(&b)?;
    let pooled: Vec<f64> = ya.iter().chain(&yb).copied().collect();
    let (_, variance) = mean_variance_of(&pooled);
    if variance == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let indices = (0..d)
        .map(|i| {
            let yab = model.evaluate_batch(&a.with_column_from(i, &b))?;
            let ss: f64 = ya.iter().zip(&yab).map(|(p, q)| (p - q) * (p - q)).sum();
            Ok(ss / (2.0 * n as f64 * variance))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((indices, variance))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolProvenance {
    pub model: String,
    pub sampler: SamplerConfig,
    pub n: usize,
    pub bins: usize,
    /// Scale of sampling noise in the first-order estimates, which are
    /// reported unclipped.
    pub noise_scale: f64,
    pub evaluations: u64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolReport {
    pub input_names: Vec<String>,
    pub first_order: Vec<f64>,
    pub total_order: Option<Vec<f64>>,
    /// Output variance from the given-data sample.
    pub variance: f64,
    pub provenance: SobolProvenance,
}

/// First-order indices from `n` given-data points in `m` bins, plus total
/// indices from a separate two-matrix run when the inputs are independent.
pub fn sobol_analysis(
    model: &ModelSpec,
    n: usize,
    m: usize,
    sampler: SamplerConfig,
) -> Result<SobolReport> {
    let batch = SampleBatch::generate(model, n, sampler)?;
    let (first_order, variance) = given_data_first_order(&batch, m)?;
    let mut evaluations = n as u64;
    let mut notes = Vec::new();
    let total_order = if model.inputs().is_correlated() {
        notes.push(Error::CorrelatedTotalOrder.to_string());
        None
    } else {
        evaluations += (n * (model.d() + 2)) as u64;
        Some(two_matrix_total_order(model, n, sampler)?.0)
    };
    Ok(SobolReport {
        input_names: model.input_names().to_vec(),
        first_order,
        total_order,
        variance,
        provenance: SobolProvenance {
            model: model.name().to_string(),
            sampler,
            n,
            bins: m,
            noise_scale: binning_noise(m, n / m),
            evaluations,
            notes,
        },
    })
}
