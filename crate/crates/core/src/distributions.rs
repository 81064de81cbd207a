//! Input laws: marginal families, an optional Gaussian copula, and the
//! map from unit-hypercube points to model inputs.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{invalid, Error, Result};
use crate::sampling::PointSet;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Inverse of the standard normal CDF for `u` in (0, 1).
pub fn std_normal_inv_cdf(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// One-dimensional input distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Marginal {
    Normal { mu: f64, sigma: f64 },
    Lognormal { mu_log: f64, sigma_log: f64 },
    Exponential { lambda: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Marginal {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Marginal::Normal { mu, sigma }.validated()
    }

    pub fn lognormal(mu_log: f64, sigma_log: f64) -> Result<Self> {
        Marginal::Lognormal { mu_log, sigma_log }.validated()
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        Marginal::Exponential { lambda }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Marginal::Uniform { lo, hi }.validated()
    }

    /// Lognormal variable with the given mean and coefficient of variation
    /// (moment matching: `sigma_log^2 = ln(1 + cov^2)`,
    /// `mu_log = ln(mean) - sigma_log^2 / 2`).
    pub fn lognormal_from_mean_cov(mean: f64, cov: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) || !(cov > 0.0 && cov.is_finite()) {
            return Err(invalid(format!(
                "lognormal mean and coefficient of variation must be positive (got {mean}, {cov})"
            )));
        }
        let var_log = (cov * cov).ln_1p();
        Marginal::lognormal(mean.ln() - 0.5 * var_log, var_log.sqrt())
    }

    /// Checks parameter constraints and returns `self` unchanged.
    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            Marginal::Normal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            Marginal::Lognormal { mu_log, sigma_log } => {
                mu_log.is_finite() && sigma_log > 0.0 && sigma_log.is_finite()
            }
            Marginal::Exponential { lambda } => lambda > 0.0 && lambda.is_finite(),
            Marginal::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
        };
        if ok {
            Ok(self)
        } else {
            Err(invalid(format!("invalid marginal parameters: {self:?}")))
        }
    }

    pub fn is_normal(&self) -> bool {
        matches!(self, Marginal::Normal { .. })
    }

    /// Inverse CDF; `u` must lie in the open unit interval.
    pub fn inv_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(invalid(format!("inverse CDF needs u in (0, 1), got {u}")));
        }
        Ok(self.quantile(u))
    }

    #[inline]
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => mu + sigma * std_normal_inv_cdf(u),
            Marginal::Lognormal { mu_log, sigma_log } => {
                (mu_log + sigma_log * std_normal_inv_cdf(u)).exp()
            }
            Marginal::Exponential { lambda } => -(-u).ln_1p() / lambda,
            Marginal::Uniform { lo, hi } => lo + u * (hi - lo),
        }
    }

    /// Value whose normal score is `z`, i.e. `F^{-1}(Phi(z))`. Normal and
    /// lognormal families skip the round trip through the unit interval.
    #[inline]
    fn at_normal_score(&self, z: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => mu + sigma * z,
            Marginal::Lognormal { mu_log, sigma_log } => (mu_log + sigma_log * z).exp(),
            _ => {
                let u = std_normal_cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                self.quantile(u)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Normal { mu, .. } => mu,
            Marginal::Lognormal { mu_log, sigma_log } => {
                (mu_log + 0.5 * sigma_log * sigma_log).exp()
            }
            Marginal::Exponential { lambda } => 1.0 / lambda,
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Marginal::Normal { sigma, .. } => sigma * sigma,
            Marginal::Lognormal { mu_log, sigma_log } => {
                let s2 = sigma_log * sigma_log;
                s2.exp_m1() * (2.0 * mu_log + s2).exp()
            }
            Marginal::Exponential { lambda } => 1.0 / (lambda * lambda),
            Marginal::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
        }
    }
}

/// Joint law of the model inputs: independent marginals, optionally coupled
/// through a Gaussian copula with the given correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JointInputSpec {
    marginals: Vec<Marginal>,
    correlation: Option<Vec<Vec<f64>>>,
    /// Lower Cholesky factor, row-major; `None` when inputs are independent.
    cholesky: Option<Vec<f64>>,
}

impl JointInputSpec {
    pub fn independent(marginals: Vec<Marginal>) -> Result<Self> {
        Self::new(marginals, None)
    }

    /// Builds a joint law. An identity correlation is treated as
    /// independence.
    pub fn new(marginals: Vec<Marginal>, correlation: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(invalid("at least one marginal is required"));
        }
        for m in &marginals {
            m.validated()?;
        }
        let d = marginals.len();
        let mut cholesky = None;
        if let Some(c) = &correlation {
            check_correlation(c, d)?;
            let is_identity = c.iter().enumerate().all(|(i, row)| {
                row.iter()
                    .enumerate()
                    .all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 })
            });
            if !is_identity {
                cholesky = Some(lower_cholesky(c)?);
            }
        }
        Ok(Self {
            marginals,
            correlation,
            cholesky,
        })
    }

    pub fn d(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn correlation(&self) -> Option<&[Vec<f64>]> {
        self.correlation.as_deref()
    }

    /// True when the copula couples the inputs.
    pub fn is_correlated(&self) -> bool {
        self.cholesky.is_some()
    }

    pub fn all_normal(&self) -> bool {
        self.marginals.iter().all(Marginal::is_normal)
    }

    /// Covariance matrix of an all-normal spec.
    pub fn covariance(&self) -> Result<Vec<Vec<f64>>> {
        let sigmas = self.normal_params()?.1;
        let d = self.d();
        Ok((0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let rho = match &self.correlation {
                            Some(c) => c[i][j],
                            None if i == j => 1.0,
                            None => 0.0,
                        };
                        rho * sigmas[i] * sigmas[j]
                    })
                    .collect()
            })
            .collect())
    }

    fn normal_params(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        self.marginals
            .iter()
            .map(|m| match *m {
                Marginal::Normal { mu, sigma } => Ok((mu, sigma)),
                _ => Err(Error::NonGaussianConditioning),
            })
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().unzip())
    }

    /// Maps unit-hypercube points to input space.
    pub fn transform(&self, points: &PointSet) -> Result<InputMatrix> {
        let d = self.d();
        if points.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: points.d(),
            });
        }
        let mut values = vec![0.0; points.n() * d];
        values
            .par_chunks_mut(d)
            .zip(points.values().par_chunks(d))
            .for_each_init(
                || vec![0.0; d],
                |z, (out, u)| match &self.cholesky {
                    None => {
                        for ((o, &ui), m) in out.iter_mut().zip(u).zip(&self.marginals) {
                            *o = m.quantile(ui);
                        }
                    }
                    Some(l) => {
                        for (zi, &ui) in z.iter_mut().zip(u) {
                            *zi = std_normal_inv_cdf(ui);
                        }
                        for (i, (o, m)) in out.iter_mut().zip(&self.marginals).enumerate() {
                            let row = &l[i * d..i * d + i + 1];
                            let y: f64 = row.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                            *o = m.at_normal_score(y);
                        }
                    }
                },
            );
        Ok(InputMatrix::from_raw(points.n(), d, values))
    }

    /// Exact Gaussian law of the other `d - 1` inputs given `x_i = value`,
    /// by Schur complement of the covariance. Requires all-normal marginals.
    pub fn conditional_gaussian(&self, i: usize, value: f64) -> Result<JointInputSpec> {
        let d = self.d();
        if i >= d {
            return Err(invalid(format!("input index {i} out of range for d = {d}")));
        }
        if d < 2 {
            return Err(invalid("conditioning needs at least two inputs"));
        }
        let mu = self.normal_params()?.0;
        let rest: Vec<usize> = (0..d).filter(|&k| k != i).collect();
        let cov = self.covariance()?;
        let var_i = cov[i][i];

        let cond_mean: Vec<f64> = rest
            .iter()
            .map(|&k| mu[k] + cov[k][i] / var_i * (value - mu[i]))
            .collect();
        let cond_cov: Vec<Vec<f64>> = rest
            .iter()
            .map(|&k| {
                rest.iter()
                    .map(|&l| cov[k][l] - cov[k][i] * cov[i][l] / var_i)
                    .collect()
            })
            .collect();
        let cond_sd: Vec<f64> = (0..rest.len()).map(|k| cond_cov[k][k].sqrt()).collect();

        let marginals = cond_mean
            .iter()
            .zip(&cond_sd)
            .map(|(&m, &s)| Marginal::normal(m, s))
            .collect::<Result<Vec<_>>>()?;
        let correlation = if self.correlation.is_some() {
            let mut c: Vec<Vec<f64>> = (0..rest.len())
                .map(|k| {
                    (0..rest.len())
                        .map(|l| cond_cov[k][l] / (cond_sd[k] * cond_sd[l]))
                        .collect()
                })
                .collect();
            for (k, row) in c.iter_mut().enumerate() {
                row[k] = 1.0;
            }
            // Symmetrize away rounding.
            for k in 0..rest.len() {
                for l in 0..k {
                    let v = 0.5 * (c[k][l] + c[l][k]);
                    c[k][l] = v;
                    c[l][k] = v;
                }
            }
            Some(c)
        } else {
            None
        };
        JointInputSpec::new(marginals, correlation)
    }
}

fn check_correlation(c: &[Vec<f64>], d: usize) -> Result<()> {
    if c.len() != d || c.iter().any(|row| row.len() != d) {
        return Err(invalid(format!("correlation matrix must be {d}x{d}")));
    }
    for i in 0..d {
        if c[i][i] != 1.0 {
            return Err(invalid(format!(
                "correlation diagonal entry ({i},{i}) must be 1"
            )));
        }
        for j in 0..i {
            let (a, b) = (c[i][j], c[j][i]);
            if !a.is_finite() || (a - b).abs() > 1e-12 {
                return Err(invalid(format!(
                    "correlation matrix is not symmetric at ({i},{j})"
                )));
            }
            if !(-1.0..=1.0).contains(&a) {
                return Err(invalid(format!(
                    "correlation entry ({i},{j}) = {a} outside [-1, 1]"
                )));
            }
        }
    }
    Ok(())
}

fn lower_cholesky(c: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = c.len();
    let m = DMatrix::from_fn(d, d, |i, j| c[i][j]);
    let chol = m.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    if l.diagonal().iter().any(|&x| x.is_nan() || x <= 1e-12) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok((0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| l[(i, j)])
        .collect())
}

/// Row-major `n x d` matrix of input realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct InputMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl InputMatrix {
    pub fn from_raw(n: usize, d: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * d, "matrix storage does not match shape");
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

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Copy with column `j` overwritten by `value`.
    pub fn with_column_fixed(&self, j: usize, value: f64) -> InputMatrix {
        let mut values = self.values.clone();
        for row in values.chunks_exact_mut(self.d) {
            row[j] = value;
        }
        InputMatrix {
            n: self.n,
            d: self.d,
            values,
        }
    }

    /// Copy with column `j` taken from `other`.
    pub fn with_column_from(&self, j: usize, other: &InputMatrix) -> InputMatrix {
        assert_eq!((self.n, self.d), (other.n, other.d));
        let mut values = self.values.clone();
        for (row, src) in values.chunks_exact_mut(self.d).zip(other.rows()) {
            row[j] = src[j];
        }
        InputMatrix {
            n: self.n,
            d: self.d,
            values,
        }
    }

    /// Sample covariance (population convention) of columns `a` and `b`.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let n = self.n as f64;
        let ma = self.rows().map(|r| r[a]).sum::<f64>() / n;
        let mb = self.rows().map(|r| r[b]).sum::<f64>() / n;
        self.rows().map(|r| (r[a] - ma) * (r[b] - mb)).sum::<f64>() / n
    }
}
