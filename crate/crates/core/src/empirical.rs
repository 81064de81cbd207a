//! Empirical CDF, order-statistic quantiles and moments of output samples.

use crate::error::{invalid, Error, Result};

/// A non-empty sample of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector(Vec<f64>);

impl SampleVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("sample must contain at least one value"));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for SampleVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "quantile level alpha = {alpha} must lie in (0, 1]"
        )))
    }
}

/// 1-based rank `ceil(alpha * n)` of the order statistic that realizes the
/// infimum definition of the empirical quantile: the smallest `k` with
/// `k / n >= alpha`. The product `alpha * n` is corrected for rounding so
/// that e.g. `alpha = 0.07, n = 100` yields 7, not 8.
#[inline]
pub fn order_statistic_rank(alpha: f64, n: usize) -> usize {
    let nf = n as f64;
    let mut k = ((alpha * nf).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= alpha {
        k -= 1;
    }
    while k < n && (k as f64 / nf) < alpha {
        k += 1;
    }
    k
}

/// Smallest sample value `y` whose empirical CDF `#{v <= y} / n` is at
/// least `alpha`. Linear expected time (selection, no full sort).
pub fn empirical_quantile(v: &SampleVector, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut scratch = v.0.clone();
    Ok(select_quantile(&mut scratch, alpha))
}

/// In-place variant of [`empirical_quantile`] for callers that own a
/// scratch buffer; `values` is reordered. `alpha` must already be valid and
/// `values` finite and non-empty.
pub(crate) fn select_quantile(values: &mut [f64], alpha: f64) -> f64 {
    let k = order_statistic_rank(alpha, values.len());
    *values.select_nth_unstable_by(k - 1, f64::total_cmp).1
}

/// Quantiles for every level in `alphas` from one sort of the sample.
/// Identical to calling [`empirical_quantile`] per level.
pub fn empirical_quantiles(v: &SampleVector, alphas: &[f64]) -> Result<Vec<f64>> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let mut sorted = v.0.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantiles_of_sorted(&sorted, alphas))
}

pub(crate) fn quantiles_of_sorted(sorted: &[f64], alphas: &[f64]) -> Vec<f64> {
    alphas
        .iter()
        .map(|&a| sorted[order_statistic_rank(a, sorted.len()) - 1])
        .collect()
}

/// Fraction of sample values strictly below `y`.
pub fn ecdf(v: &SampleVector, y: f64) -> f64 {
    v.0.iter().filter(|&&x| x < y).count() as f64 / v.len() as f64
}

/// Mean and population variance (denominator `n`), two-pass.
pub fn mean_variance(v: &SampleVector) -> Result<(f64, f64)> {
    if v.len() < 2 {
        return Err(invalid("variance needs at least two values"));
    }
    Ok(mean_variance_of(&v.0))
}

pub(crate) fn mean_variance_of(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (ss, comp) = values.iter().fold((0.0, 0.0), |(ss, c), &x| {
        let dx = x - mean;
        (ss + dx * dx, c + dx)
    });
    // Corrected two-pass formula.
    (mean, ((ss - comp * comp / n) / n).max(0.0))
}
