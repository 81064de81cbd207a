//! Error of an estimator against a reference along a ladder of evaluation
//! budgets, over replicate samples.

use serde::Serialize;

use super::{brute_force_qbsm, dlr_qbsm, AlphaGrid, BruteForceConfig, DlrConfig, QbsmReport};
use crate::error::{invalid, Error, Result};
use crate::models::ModelSpec;
use crate::sampling::{SamplerConfig, SamplerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMethod {
    Dlr,
    BruteForce,
}

impl StudyMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyMethod::Dlr => "dlr",
            StudyMethod::BruteForce => "bruteforce",
        }
    }
}

/// Which normalized measure is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Measure {
    Q1,
    Q2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub method: StudyMethod,
    pub alpha: f64,
    pub measure: Measure,
    /// Model-evaluation budgets, strictly increasing.
    pub budgets: Vec<u64>,
    pub replicates: usize,
    /// Replicate `r` uses seed `seed + r` (pseudorandom) or skips
    /// `r * budget` further points (Sobol' sequence).
    pub sampler: SamplerConfig,
}

/// Error statistics for one input at one budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub method: StudyMethod,
    pub budget: u64,
    /// Sample size: `N` for DLR, `n_outer = n_inner` for brute force.
    pub n: usize,
    pub evaluations: u64,
    pub input: usize,
    pub replicates: usize,
    pub mae: f64,
    pub rmse: f64,
}

fn replicate_sampler(base: SamplerConfig, r: usize, budget: u64) -> SamplerConfig {
    match base.kind {
        SamplerKind::Pseudorandom => SamplerConfig::pseudorandom(base.seed.wrapping_add(r as u64)),
        SamplerKind::SobolSequence => SamplerConfig::sobol_skip(base.skip + r as u64 * budget),
    }
}

fn run_once(
    model: &ModelSpec,
    grid: &AlphaGrid,
    method: StudyMethod,
    budget: u64,
    sampler: SamplerConfig,
) -> Result<(QbsmReport, usize)> {
    match method {
        StudyMethod::Dlr => {
            let n = usize::try_from(budget).map_err(|_| invalid("budget too large"))?;
            let cfg = DlrConfig::for_grid(n, grid, sampler)?;
            Ok((dlr_qbsm(model, grid, &cfg)?, n))
        }
        StudyMethod::BruteForce => {
            let cfg = BruteForceConfig::for_budget(budget, model.d(), sampler)?;
            Ok((brute_force_qbsm(model, grid, &cfg)?, cfg.n_outer()))
        }
    }
}

/// Mean absolute error and RMSE of the chosen normalized measure, per
/// budget and input, against `reference` (one value per input).
pub fn convergence_study(
    model: &ModelSpec,
    cfg: &ConvergenceConfig,
    reference: &[f64],
) -> Result<Vec<ConvergencePoint>> {
    if reference.len() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            got: reference.len(),
        });
    }
    if cfg.replicates == 0 {
        return Err(invalid("replicates must be at least 1"));
    }
    if cfg.budgets.is_empty() || cfg.budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(
            "budget ladder must be non-empty and strictly increasing",
        ));
    }
    let grid = AlphaGrid::single(cfg.alpha)?;
    let mut points = Vec::with_capacity(cfg.budgets.len() * model.d());
    for &budget in &cfg.budgets {
        let mut abs = vec![0.0; model.d()];
        let mut sq = vec![0.0; model.d()];
        let mut n = 0;
        let mut evaluations = 0;
        for r in 0..cfg.replicates {
            let (report, size) = run_once(
                model,
                &grid,
                cfg.method,
                budget,
                replicate_sampler(cfg.sampler, r, budget),
            )?;
            n = size;
            evaluations = report.provenance.evaluations;
            let result = &report.results[0];
            let estimate = match cfg.measure {
                Measure::Q1 => &result.q1.values,
                Measure::Q2 => &result.q2.values,
            };
            for (i, (e, t)) in estimate.iter().zip(reference).enumerate() {
                abs[i] += (e - t).abs();
                sq[i] += (e - t) * (e - t);
            }
        }
        let reps = cfg.replicates as f64;
        points.extend((0..model.d()).map(|i| ConvergencePoint {
            method: cfg.method,
            budget,
            n,
            evaluations,
            input: i,
            replicates: cfg.replicates,
            mae: abs[i] / reps,
            rmse: (sq[i] / reps).sqrt(),
        }));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::theorem1_check;
    use crate::models::{builtin, TEST1_SIGMA};

    fn cfg(method: StudyMethod, replicates: usize, budgets: Vec<u64>) -> ConvergenceConfig {
        ConvergenceConfig {
            method,
            alpha: 0.5,
            measure: Measure::Q2,
            budgets,
            replicates,
            sampler: SamplerConfig::pseudorandom(10),
        }
    }

    #[test]
    fn single_replicate_mae_equals_rmse() {
        let m = builtin("test1_linear_gaussian").unwrap();
        let (_, q) = theorem1_check(&[1.0; 4], &TEST1_SIGMA).unwrap();
        let pts = convergence_study(&m, &cfg(StudyMethod::Dlr, 1, vec![1024, 4096]), &q).unwrap();
        assert_eq!(pts.len(), 8);
        for p in pts {
            assert!((p.mae - p.rmse).abs() <= 1e-15 * p.mae.max(1.0));
        }
    }

    #[test]
    fn reruns_identical_and_replicates_distinct() {
        let m = builtin("test1_linear_gaussian").unwrap();
        let (_, q) = theorem1_check(&[1.0; 4], &TEST1_SIGMA).unwrap();
        let c = cfg(StudyMethod::BruteForce, 2, vec![2000]);
        assert_eq!(
            convergence_study(&m, &c, &q).unwrap(),
            convergence_study(&m, &c, &q).unwrap()
        );
        let grid = AlphaGrid::single(0.5).unwrap();
        let a = run_once(
            &m,
            &grid,
            StudyMethod::Dlr,
            4096,
            replicate_sampler(c.sampler, 0, 4096),
        )
        .unwrap();
        let b = run_once(
            &m,
            &grid,
            StudyMethod::Dlr,
            4096,
            replicate_sampler(c.sampler, 1, 4096),
        )
        .unwrap();
        assert_ne!(a.0.results, b.0.results);
    }

    #[test]
    fn ladder_validation() {
        let m = builtin("test1_linear_gaussian").unwrap();
        let q = [0.25; 4];
        assert!(convergence_study(&m, &cfg(StudyMethod::Dlr, 1, vec![4096, 1024]), &q).is_err());
        assert!(convergence_study(&m, &cfg(StudyMethod::Dlr, 0, vec![1024]), &q).is_err());
        assert!(convergence_study(&m, &cfg(StudyMethod::Dlr, 1, vec![1024]), &q[..2]).is_err());
    }
}
