//! Closed-form sensitivity values for the benchmark models.

use serde::Serialize;

use crate::distributions::{std_normal_cdf, std_normal_inv_cdf};
use crate::error::{invalid, Error, Result};

/// Known sensitivity values of one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReference {
    pub first_order: Vec<f64>,
    pub total_order: Option<Vec<f64>>,
    /// `(alpha, qbar2 per input)` pairs, when a closed form exists.
    pub qbar2_curve: Option<Vec<(f64, Vec<f64>)>>,
    /// Short name of the formula the values come from.
    pub formula: &'static str,
}

fn check_linear(a: &[f64], sigma: &[f64]) -> Result<Vec<f64>> {
    if a.len() != sigma.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: sigma.len(),
        });
    }
    if a.is_empty() {
        return Err(invalid("linear model needs at least one input"));
    }
    if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(invalid(format!(
            "standard deviation {s} must be finite and nonnegative"
        )));
    }
    let contrib: Vec<f64> = a
        .iter()
        .zip(sigma)
        .map(|(a, s)| (a * s) * (a * s))
        .collect();
    if contrib.iter().all(|&c| c == 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(contrib)
}

fn check_open_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// First-order (and total) Sobol' indices of `Y = sum a_i x_i` with
/// independent normal inputs: `a_i^2 sigma_i^2 / sum_j a_j^2 sigma_j^2`.
pub fn linear_gaussian_sobol(a: &[f64], sigma: &[f64]) -> Result<Vec<f64>> {
    let contrib = check_linear(a, sigma)?;
    let total: f64 = contrib.iter().sum();
    Ok(contrib.into_iter().map(|c| c / total).collect())
}

/// Output standard deviation and, per input, that of the output with the
/// input frozen.
fn linear_spreads(contrib: &[f64]) -> (f64, Vec<f64>) {
    let total: f64 = contrib.iter().sum();
    let without = contrib
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let rest: f64 = contrib
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c)
                .sum();
            rest.sqrt()
        })
        .collect();
    (total.sqrt(), without)
}

/// Squared-distance quantile measure of a linear model with independent
/// normal inputs:
/// `a_i^2 sigma_i^2 + z_alpha^2 (sigma_Y - sigma_Y(without i))^2`.
pub fn linear_gaussian_qbar2(a: &[f64], sigma: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_open_alpha(alpha)?;
    let contrib = check_linear(a, sigma)?;
    let z = std_normal_inv_cdf(alpha);
    let (sd, without) = linear_spreads(&contrib);
    Ok(contrib
        .iter()
        .zip(without)
        .map(|(c, w)| c + z * z * (sd - w) * (sd - w))
        .collect())
}

/// Absolute-distance quantile measure of the same model. The conditional
/// shift is normal with mean `z_alpha (sigma_Y - sigma_Y(without i))` and
/// standard deviation `|a_i| sigma_i`, so this is a folded-normal mean.
pub fn linear_gaussian_qbar1(a: &[f64], sigma: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_open_alpha(alpha)?;
    let contrib = check_linear(a, sigma)?;
    let z = std_normal_inv_cdf(alpha);
    let (sd, without) = linear_spreads(&contrib);
    Ok(contrib
        .iter()
        .zip(without)
        .map(|(c, w)| {
            let shift = z * (sd - w);
            let s = c.sqrt();
            if s == 0.0 {
                return shift.abs();
            }
            let r = shift / s;
            s * (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * r * r).exp()
                + shift * (1.0 - 2.0 * std_normal_cdf(-r))
        })
        .collect())
}

/// Sobol' indices and the normalized squared-distance measure at the median
/// for a linear-Gaussian model. The two coincide.
pub fn theorem1_check(a: &[f64], sigma: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = linear_gaussian_sobol(a, sigma)?;
    let q = linear_gaussian_qbar2(a, sigma, 0.5)?;
    let total: f64 = q.iter().sum();
    Ok((s, q.into_iter().map(|v| v / total).collect()))
}

/// Reference for a linear-Gaussian model on an alpha grid.
pub fn linear_gaussian_reference(
    a: &[f64],
    sigma: &[f64],
    alphas: &[f64],
) -> Result<AnalyticReference> {
    let s = linear_gaussian_sobol(a, sigma)?;
    let curve = alphas
        .iter()
        .map(|&al| linear_gaussian_qbar2(a, sigma, al).map(|q| (al, q)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyticReference {
        total_order: Some(s.clone()),
        first_order: s,
        qbar2_curve: Some(curve),
        formula: "linear_gaussian",
    })
}

/// Parameters of `Y = x1 x3 + x2 x4` with zero-mean `(x1, x2)` independent
/// of `(x3, x4)`, each pair bivariate normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearParams {
    pub mu3: f64,
    pub mu4: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub sigma4: f64,
    /// Covariance of x1 and x2.
    pub cov12: f64,
    /// Covariance of x3 and x4.
    pub cov34: f64,
}

impl BilinearParams {
    /// The correlated bilinear benchmark.
    pub const TEST5: BilinearParams = BilinearParams {
        mu3: 250.0,
        mu4: 400.0,
        sigma1: 4.0,
        sigma2: 2.0,
        sigma3: 200.0,
        sigma4: 300.0,
        cov12: 2.4,
        cov34: -1.8e4,
    };
}

/// First-order and total Sobol' indices of the correlated bilinear model.
///
/// With `rho` the pair correlations and `D` the output variance:
/// `S1 = (s1^2 mu3 + c12 mu4)^2 / (s1^2 D)`,
/// `S2 = (s2^2 mu4 + c12 mu3)^2 / (s2^2 D)`, `S3 = S4 = 0`,
/// `S1tot = s1^2 (1 - rho12^2)(s3^2 + mu3^2) / D`,
/// `S2tot = s2^2 (1 - rho12^2)(s4^2 + mu4^2) / D`,
/// `S3tot = s1^2 s3^2 (1 - rho34^2) / D`, `S4tot = s2^2 s4^2 (1 - rho34^2) / D`.
pub fn test5_analytic_sobol(p: &BilinearParams) -> Result<AnalyticReference> {
    let sds = [p.sigma1, p.sigma2, p.sigma3, p.sigma4];
    if let Some(s) = sds.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(invalid(format!("standard deviation {s} must be positive")));
    }
    let rho12 = p.cov12 / (p.sigma1 * p.sigma2);
    let rho34 = p.cov34 / (p.sigma3 * p.sigma4);
    if !(rho12.abs() < 1.0 && rho34.abs() < 1.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let (v1, v2, v3, v4) = (
        p.sigma1.powi(2),
        p.sigma2.powi(2),
        p.sigma3.powi(2),
        p.sigma4.powi(2),
    );
    let d = v1 * (v3 + p.mu3 * p.mu3)
        + v2 * (v4 + p.mu4 * p.mu4)
        + 2.0 * p.cov12 * (p.cov34 + p.mu3 * p.mu4);
    if d.is_nan() || d <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let first = vec![
        (v1 * p.mu3 + p.cov12 * p.mu4).powi(2) / (v1 * d),
        (v2 * p.mu4 + p.cov12 * p.mu3).powi(2) / (v2 * d),
        0.0,
        0.0,
    ];
    let total = vec![
        v1 * (1.0 - rho12 * rho12) * (v3 + p.mu3 * p.mu3) / d,
        v2 * (1.0 - rho12 * rho12) * (v4 + p.mu4 * p.mu4) / d,
        v1 * v3 * (1.0 - rho34 * rho34) / d,
        v2 * v4 * (1.0 - rho34 * rho34) / d,
    ];
    Ok(AnalyticReference {
        first_order: first,
        total_order: Some(total),
        qbar2_curve: None,
        formula: "correlated_bilinear",
    })
}

/// Published Sobol' indices of the Ishigami function with a = 7, b = 0.1.
pub fn ishigami_reference() -> AnalyticReference {
    AnalyticReference {
        first_order: vec![0.314, 0.442, 0.0],
        total_order: Some(vec![0.558, 0.442, 0.244]),
        qbar2_curve: None,
        formula: "ishigami_tabulated",
    }
}

/// Closed-form reference for a built-in model, when one exists. The
/// quantile curve is evaluated on `alphas` for the linear-Gaussian models.
pub fn builtin_reference(name: &str, alphas: &[f64]) -> Option<AnalyticReference> {
    use crate::models::TEST1_SIGMA;
    match name {
        "test1_linear_gaussian" | "var_portfolio_demo" => {
            linear_gaussian_reference(&[1.0; 4], &TEST1_SIGMA, alphas).ok()
        }
        // Output variance is additive over the four inputs of equal variance.
        "test2_exponential" => Some(AnalyticReference {
            first_order: vec![0.25; 4],
            total_order: Some(vec![0.25; 4]),
            qbar2_curve: None,
            formula: "variance_additivity",
        }),
        "ishigami" => Some(ishigami_reference()),
        "test5_correlated_bilinear" => test5_analytic_sobol(&BilinearParams::TEST5).ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{TEST1_MU, TEST1_SIGMA};
    use crate::sampling::random_points;

    const ONES: [f64; 4] = [1.0; 4];

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn test1_sobol() {
        let s = linear_gaussian_sobol(&ONES, &TEST1_SIGMA).unwrap();
        assert!(close(&s, &[0.0741, 0.167, 0.296, 0.463], 5e-4), "{s:?}");
    }

    #[test]
    fn sobol_trivial_cases() {
        assert_eq!(
            linear_gaussian_sobol(&[1.0, 1.0], &[1.0, 1.0]).unwrap(),
            vec![0.5, 0.5]
        );
        assert_eq!(
            linear_gaussian_sobol(&[1.0, 0.0], &[1.0, 5.0]).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            linear_gaussian_sobol(&[0.0, 0.0], &[1.0, 5.0]),
            Err(Error::ZeroVariance)
        );
    }

    #[test]
    fn qbar2_at_median_is_partial_variance() {
        let q = linear_gaussian_qbar2(&ONES, &TEST1_SIGMA, 0.5).unwrap();
        assert!(close(&q, &[1.0, 2.25, 4.0, 6.25], 1e-12), "{q:?}");
    }

    #[test]
    fn qbar2_symmetric_in_alpha() {
        let a = [0.3, -2.0, 1.5];
        let s = [2.0, 0.1, 1.0];
        for alpha in [0.01, 0.1, 0.27, 0.4] {
            let lo = linear_gaussian_qbar2(&a, &s, alpha).unwrap();
            let hi = linear_gaussian_qbar2(&a, &s, 1.0 - alpha).unwrap();
            assert!(close(&lo, &hi, 1e-9 * lo.iter().sum::<f64>()), "{alpha}");
        }
    }

    #[test]
    fn qbar_rejects_closed_alpha() {
        for alpha in [0.0, 1.0, -0.5, 1.5] {
            assert!(linear_gaussian_qbar2(&ONES, &TEST1_SIGMA, alpha).is_err());
            assert!(linear_gaussian_qbar1(&ONES, &TEST1_SIGMA, alpha).is_err());
        }
    }

    /// Outer integral over x_i by plain Monte Carlo, with the conditional and
    /// unconditional quantiles taken from the normal laws directly.
    fn mc_qbar(alpha: f64, draws: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let z = std_normal_inv_cdf(alpha);
        let var: Vec<f64> = TEST1_SIGMA.iter().map(|s| s * s).collect();
        let total: f64 = var.iter().sum();
        let mean_y: f64 = TEST1_MU.iter().sum();
        let q_y = mean_y + z * total.sqrt();
        let u = random_points(draws, 4, seed).unwrap();
        let (mut q1, mut q2) = (vec![0.0; 4], vec![0.0; 4]);
        for row in u.rows() {
            for i in 0..4 {
                let x = TEST1_MU[i] + TEST1_SIGMA[i] * std_normal_inv_cdf(row[i]);
                let q_cond = x + (mean_y - TEST1_MU[i]) + z * (total - var[i]).sqrt();
                let diff = q_y - q_cond;
                q1[i] += diff.abs();
                q2[i] += diff * diff;
            }
        }
        let n = draws as f64;
        (
            q1.iter().map(|v| v / n).collect(),
            q2.iter().map(|v| v / n).collect(),
        )
    }

    fn normalized(v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    }

    #[test]
    fn qbar2_matches_monte_carlo_oracle() {
        let alpha = 0.975;
        let (_, mc) = mc_qbar(alpha, 1_000_000, 17);
        let closed = linear_gaussian_qbar2(&ONES, &TEST1_SIGMA, alpha).unwrap();
        let (mc, closed) = (normalized(&mc), normalized(&closed));
        assert!(close(&mc, &closed, 0.005), "{mc:?} vs {closed:?}");
    }

    #[test]
    fn qbar1_matches_monte_carlo_oracle() {
        for alpha in [0.05, 0.5, 0.975] {
            let (mc, _) = mc_qbar(alpha, 400_000, 3);
            let closed = linear_gaussian_qbar1(&ONES, &TEST1_SIGMA, alpha).unwrap();
            for (m, c) in mc.iter().zip(&closed) {
                assert!(
                    (m - c).abs() < 0.01 * c,
                    "alpha {alpha}: {mc:?} vs {closed:?}"
                );
            }
        }
    }

    #[test]
    fn theorem1_on_test1() {
        let (s, q) = theorem1_check(&ONES, &TEST1_SIGMA).unwrap();
        assert!(close(&s, &[0.0741, 0.167, 0.296, 0.463], 5e-4));
        assert!(close(&s, &q, 1e-12));
        let (s, q) = theorem1_check(&[2.0, 2.0], &[0.5, 0.5]).unwrap();
        assert_eq!((s.clone(), q), (vec![0.5, 0.5], s));
    }

    #[test]
    fn theorem1_on_seeded_grid() {
        let u = random_points(200, 10, 99).unwrap();
        for row in u.rows() {
            let d = 2 + (row[0] * 4.0) as usize;
            let a: Vec<f64> = row[1..=d].iter().map(|x| 10.0 * x - 5.0).collect();
            let s: Vec<f64> = row[5..5 + d].iter().map(|x| 0.01 + 3.0 * x).collect();
            let (first, q) = theorem1_check(&a, &s).unwrap();
            assert!(close(&first, &q, 1e-12), "{a:?} {s:?}");
        }
    }

    #[test]
    fn test5_matches_tabulated_values() {
        let r = test5_analytic_sobol(&BilinearParams::TEST5).unwrap();
        let round3 =
            |v: &[f64]| -> Vec<f64> { v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect() };
        assert_eq!(round3(&r.first_order), vec![0.507, 0.399, 0.0, 0.0]);
        assert_eq!(
            round3(r.total_order.as_ref().unwrap()),
            vec![0.492, 0.300, 0.192, 0.108]
        );
    }

    #[test]
    fn test5_variance_matches_model_covariance() {
        // D from the printed expression equals Var(x1 x3 + x2 x4) computed by
        // the product-moment rules for independent pairs.
        let p = BilinearParams::TEST5;
        let d = 16.0 * (4e4 + 250.0f64.powi(2))
            + 4.0 * (9e4 + 400.0f64.powi(2))
            + 2.0 * 2.4 * (-1.8e4 + 250.0 * 400.0);
        assert!((d - 3_033_600.0).abs() < 1e-6);
        let r = test5_analytic_sobol(&p).unwrap();
        assert!((r.first_order[0] - (4000.0 + 960.0f64).powi(2) / 16.0 / d).abs() < 1e-15);
    }

    #[test]
    fn test5_uncorrelated_symmetry() {
        let p = BilinearParams {
            mu3: 0.0,
            mu4: 0.0,
            sigma1: 1.5,
            sigma2: 0.7,
            sigma3: 2.0,
            sigma4: 3.0,
            cov12: 0.0,
            cov34: 0.0,
        };
        let r = test5_analytic_sobol(&p).unwrap();
        let d = 1.5f64.powi(2) * 4.0 + 0.49 * 9.0;
        let tot = r.total_order.unwrap();
        assert!((tot[0] - 2.25 * 4.0 / d).abs() < 1e-15);
        let swapped = BilinearParams {
            sigma1: 0.7,
            sigma2: 1.5,
            sigma3: 3.0,
            sigma4: 2.0,
            ..p
        };
        let tot_s = test5_analytic_sobol(&swapped).unwrap().total_order.unwrap();
        assert!(close(
            &tot,
            &[tot_s[1], tot_s[0], tot_s[3], tot_s[2]],
            1e-15
        ));
    }

    #[test]
    fn test5_rejects_singular_pairs() {
        let p = BilinearParams {
            cov12: 8.0,
            ..BilinearParams::TEST5
        };
        assert_eq!(test5_analytic_sobol(&p), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn builtin_references() {
        let r = builtin_reference("var_portfolio_demo", &[0.5]).unwrap();
        assert_eq!(r.qbar2_curve.unwrap()[0].1, vec![1.0, 2.25, 4.0, 6.25]);
        assert!(builtin_reference("roof_truss", &[0.5]).is_none());
        assert_eq!(
            builtin_reference("test5_correlated_bilinear", &[])
                .unwrap()
                .first_order[3],
            0.0
        );
    }

    #[test]
    fn ishigami_constants() {
        let r = ishigami_reference();
        assert_eq!(r.first_order[2], 0.0);
        assert!(r.first_order.iter().sum::<f64>() < 1.0);
        assert_eq!(r.total_order.unwrap()[1], r.first_order[1]);
    }
}
