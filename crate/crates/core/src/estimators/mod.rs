//! Estimators of the quantile-based measures and of Sobol' indices.
//!
//! Both quantile estimators follow the same pipeline: draw every input point
//! up front, evaluate the model (in parallel, row order preserved), then
//! reduce in a fixed order. Results therefore do not depend on the number of
//! worker threads.

mod brute_force;
mod convergence;
mod dlr;
mod sobol_indices;

pub use brute_force::{brute_force_qbsm, BruteForceConfig};
pub use convergence::{
    convergence_study, ConvergenceConfig, ConvergencePoint, Measure, StudyMethod,
};
pub use dlr::{default_bins, dlr_from_sample, dlr_qbsm, DlrConfig};
pub use sobol_indices::{
    given_data_first_order, sobol_analysis, two_matrix_total_order, SampleBatch, SobolProvenance,
    SobolReport,
};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::sampling::SamplerConfig;

/// Tail sample counts below this trigger a warning in the provenance.
pub const TAIL_WARNING_POINTS: f64 = 10.0;

/// Strictly increasing quantile levels inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaGrid(Vec<f64>);

impl AlphaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("alpha grid is empty"));
        }
        if let Some(a) = values.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(invalid(format!("alpha = {a} must lie in (0, 1)")));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "alpha grid must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        Ok(Self(values))
    }

    pub fn single(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha])
    }

    /// `start, start + step, ...` up to `stop` inclusive. Points are computed
    /// as `start + k * step` and rounded to 12 decimals so that `0.01:0.99:0.01`
    /// yields exactly the decimal values.
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
            return Err(invalid(format!(
                "invalid alpha range {start}:{stop}:{step}"
            )));
        }
        if stop < start {
            return Err(invalid(format!(
                "alpha range stop {stop} is below start {start}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let values = (0..count)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Smallest distance from a grid level to either end of (0, 1).
    pub fn min_tail(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| a.min(1.0 - a))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Default for AlphaGrid {
    /// 0.01, 0.02, ..., 0.99.
    fn default() -> Self {
        Self((1..=99).map(|k| k as f64 / 100.0).collect())
    }
}

/// Validates that conditional samples of `size` points hold enough tail
/// points for every level, returning warnings for thin tails.
pub(crate) fn check_tail_sizes(grid: &AlphaGrid, size: usize) -> Result<Vec<String>> {
    let mut warnings = Vec::new();
    for &alpha in grid.values() {
        let expected = size as f64 * alpha.min(1.0 - alpha);
        if expected < 1.0 {
            return Err(Error::SampleSize {
                alpha,
                size,
                expected,
            });
        }
        if expected < TAIL_WARNING_POINTS {
            warnings.push(format!(
                "alpha = {alpha}: only {expected:.1} expected tail points per conditional sample of {size}"
            ));
        }
    }
    Ok(warnings)
}

/// Result of [`normalize`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// Set when every input measure is zero; `values` are then all zero.
    pub degenerate: bool,
}

/// Shares `qbar_i / sum_j qbar_j`.
pub fn normalize(qbar: &[f64]) -> Result<Normalized> {
    if let Some(v) = qbar.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(invalid(format!(
            "measure {v} must be finite and nonnegative"
        )));
    }
    let total: f64 = qbar.iter().sum();
    if total == 0.0 {
        return Ok(Normalized {
            values: vec![0.0; qbar.len()],
            degenerate: true,
        });
    }
    Ok(Normalized {
        values: qbar.iter().map(|v| v / total).collect(),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileMethod {
    Dlr,
    BruteForce,
}

impl QuantileMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuantileMethod::Dlr => "dlr",
            QuantileMethod::BruteForce => "bruteforce",
        }
    }
}

/// How a report was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub model: String,
    pub method: QuantileMethod,
    pub sampler: SamplerConfig,
    /// DLR sample size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// DLR bin count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_outer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_inner: Option<usize>,
    /// Points per conditional sample.
    pub conditional_size: usize,
    pub evaluations: u64,
    pub warnings: Vec<String>,
}

/// Measures at one quantile level; vectors are indexed by input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaResult {
    pub alpha: f64,
    pub q_unconditional: f64,
    pub qbar1: Vec<f64>,
    pub qbar2: Vec<f64>,
    pub q1: Normalized,
    pub q2: Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QbsmReport {
    pub input_names: Vec<String>,
    pub results: Vec<AlphaResult>,
    pub provenance: Provenance,
}

impl QbsmReport {
    pub fn at(&self, alpha: f64) -> Option<&AlphaResult> {
        self.results.iter().find(|r| r.alpha == alpha)
    }
}

/// Turns per-input conditional quantiles into a report.
///
/// `conditional[i][g]` holds the quantiles of conditional sample `g` of input
/// `i`, one per grid level. Sums run over `g` in order.
pub(crate) fn assemble(
    grid: &AlphaGrid,
    q_unconditional: &[f64],
    conditional: &[Vec<Vec<f64>>],
    input_names: Vec<String>,
    provenance: Provenance,
) -> Result<QbsmReport> {
    let n_alpha = grid.len();
    let d = conditional.len();
    // Running sums of the two distances, slot `a * d + i`.
    let mut abs_sum = vec![0.0; n_alpha * d];
    let mut sq_sum = vec![0.0; n_alpha * d];
    for (i, groups) in conditional.iter().enumerate() {
        for group in groups {
            for (a, (&qy, &qc)) in q_unconditional.iter().zip(group).enumerate() {
                let diff = qy - qc;
                abs_sum[a * d + i] += diff.abs();
                sq_sum[a * d + i] += diff * diff;
            }
        }
    }
    let results = grid
        .values()
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let per_input = |v: &[f64]| -> Vec<f64> {
                (0..d)
                    .map(|i| v[a * d + i] / conditional[i].len() as f64)
                    .collect()
            };
            let qbar1 = per_input(&abs_sum);
            let qbar2 = per_input(&sq_sum);
            Ok(AlphaResult {
                alpha,
                q_unconditional: q_unconditional[a],
                q1: normalize(&qbar1)?,
                q2: normalize(&qbar2)?,
                qbar1,
                qbar2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QbsmReport {
        input_names,
        results,
        provenance,
    })
}
