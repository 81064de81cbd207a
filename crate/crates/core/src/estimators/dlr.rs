//! Single-sample estimator: reorder the sample by each input in turn and
//! read conditional quantiles off equally populated bins.

use rayon::prelude::*;

use super::{assemble, check_tail_sizes, AlphaGrid, Provenance, QbsmReport, QuantileMethod};
use crate::distributions::InputMatrix;
use crate::empirical::quantiles_of_sorted;
use crate::error::{invalid, Error, Result};
use crate::models::ModelSpec;
use crate::sampling::SamplerConfig;

/// Sample size `n` split into `m` bins of `n / m` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DlrConfig {
    n: usize,
    m: usize,
    sampler: SamplerConfig,
}

impl DlrConfig {
    pub fn new(n: usize, m: usize, sampler: SamplerConfig) -> Result<Self> {
        check_bins(n, m)?;
        Ok(Self { n, m, sampler })
    }

    /// Bin count from [`default_bins`].
    pub fn with_default_bins(n: usize, sampler: SamplerConfig) -> Result<Self> {
        Self::new(n, default_bins(n)?, sampler)
    }

    /// Largest divisor `m <= sqrt(n)` whose bins hold at least
    /// [`super::TAIL_WARNING_POINTS`] expected points beyond every grid
    /// level. Falls back to the smallest admissible bin count when no
    /// divisor qualifies.
    pub fn for_grid(n: usize, grid: &AlphaGrid, sampler: SamplerConfig) -> Result<Self> {
        let tail = grid.min_tail();
        let root = (n as f64).sqrt().floor() as usize;
        let mut divisors = (2..=root.min(n - 1))
            .filter(|&m| n.is_multiple_of(m))
            .peekable();
        let smallest = *divisors
            .peek()
            .ok_or_else(|| invalid(format!("sample size {n} has no divisor in 2..=sqrt(n)")))?;
        let m = divisors
            .rfind(|&m| (n / m) as f64 * tail >= super::TAIL_WARNING_POINTS)
            .unwrap_or(smallest);
        Self::new(n, m, sampler)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bin_size(&self) -> usize {
        self.n / self.m
    }

    pub fn sampler(&self) -> SamplerConfig {
        self.sampler
    }
}

fn check_bins(n: usize, m: usize) -> Result<()> {
    if m < 2 {
        return Err(invalid(format!("bin count M = {m} must be at least 2")));
    }
    if m >= n {
        return Err(invalid(format!(
            "bin count M = {m} must be below the sample size N = {n}"
        )));
    }
    if !n.is_multiple_of(m) {
        return Err(invalid(format!(
            "bin count M = {m} must divide the sample size N = {n}"
        )));
    }
    Ok(())
}

/// `floor(sqrt(n))` lowered to the nearest divisor of `n` (at least 2).
pub fn default_bins(n: usize) -> Result<usize> {
    let root = (n as f64).sqrt().floor() as usize;
    (2..=root)
        .rev()
        .find(|&m| n.is_multiple_of(m) && m < n)
        .ok_or_else(|| invalid(format!("sample size {n} has no divisor in 2..=sqrt(n)")))
}

/// Draws one sample of `cfg.n()` points, evaluates the model once per point
/// and estimates both measures for every input and grid level.
pub fn dlr_qbsm(model: &ModelSpec, grid: &AlphaGrid, cfg: &DlrConfig) -> Result<QbsmReport> {
    let warnings = check_tail_sizes(grid, cfg.bin_size())?;
    let u = cfg.sampler.points(cfg.n, model.d())?;
    let x = model.inputs().transform(&u)?;
    let y = model.evaluate_batch(&x)?;
    let provenance = Provenance {
        model: model.name().to_string(),
        method: QuantileMethod::Dlr,
        sampler: cfg.sampler,
        n: Some(cfg.n),
        bins: Some(cfg.m),
        n_outer: None,
        n_inner: None,
        conditional_size: cfg.bin_size(),
        evaluations: cfg.n as u64,
        warnings,
    };
    dlr_from_sample(
        &x,
        &y,
        grid,
        cfg.m,
        model.input_names().to_vec(),
        provenance,
    )
}

/// The estimator on given data: `x` rows paired with outputs `y`.
pub fn dlr_from_sample(
    x: &InputMatrix,
    y: &[f64],
    grid: &AlphaGrid,
    m: usize,
    input_names: Vec<String>,
    provenance: Provenance,
) -> Result<QbsmReport> {
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            got: y.len(),
        });
    }
    if input_names.len() != x.d() {
        return Err(Error::DimensionMismatch {
            expected: x.d(),
            got: input_names.len(),
        });
    }
    check_bins(x.n(), m)?;
    check_tail_sizes(grid, x.n() / m)?;
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }

    let mut sorted_y = y.to_vec();
    sorted_y.sort_unstable_by(f64::total_cmp);
    let q_unconditional = quantiles_of_sorted(&sorted_y, grid.values());

    let conditional: Vec<Vec<Vec<f64>>> = (0..x.d())
        .into_par_iter()
        .map(|i| bin_quantiles(x, y, i, m, grid.values()))
        .collect();
    assemble(
        grid,
        &q_unconditional,
        &conditional,
        input_names,
        provenance,
    )
}

/// Quantiles of `y` within each of `m` consecutive bins of the sample
/// ordered by input `i`. Equal inputs keep their original relative order.
fn bin_quantiles(x: &InputMatrix, y: &[f64], i: usize, m: usize, alphas: &[f64]) -> Vec<Vec<f64>> {
    let column = x.column(i);
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let size = y.len() / m;
    let mut scratch = vec![0.0; size];
    order
        .chunks_exact(size)
        .map(|bin| {
            for (s, &k) in scratch.iter_mut().zip(bin) {
                *s = y[k];
            }
            scratch.sort_unstable_by(f64::total_cmp);
            quantiles_of_sorted(&scratch, alphas)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::linear_gaussian_sobol;
    use crate::distributions::{JointInputSpec, Marginal};
    use crate::models::{builtin, from_linear_config, LinearModelConfig, TEST1_SIGMA};
    use crate::sampling::random_points;
    use proptest::prelude::*;

    #[test]
    fn config_invariants() {
        let s = SamplerConfig::sobol();
        assert!(DlrConfig::new(100, 1, s).is_err());
        assert!(DlrConfig::new(100, 100, s).is_err());
        assert!(DlrConfig::new(100, 7, s).is_err());
        assert_eq!(DlrConfig::new(100, 10, s).unwrap().bin_size(), 10);
    }

    #[test]
    fn default_bin_rule() {
        assert_eq!(default_bins(1 << 14).unwrap(), 128);
        assert_eq!(default_bins(1 << 15).unwrap(), 128);
        assert_eq!(default_bins(1000).unwrap(), 25);
        assert_eq!(default_bins(10_000).unwrap(), 100);
        assert!(default_bins(13).is_err());
    }

    #[test]
    fn grid_bin_rule() {
        let s = SamplerConfig::sobol();
        let full = AlphaGrid::default();
        assert_eq!(DlrConfig::for_grid(1 << 14, &full, s).unwrap().m(), 16);
        let median = AlphaGrid::single(0.5).unwrap();
        assert_eq!(DlrConfig::for_grid(1 << 14, &median, s).unwrap().m(), 128);
        assert_eq!(DlrConfig::for_grid(100, &full, s).unwrap().m(), 2);
    }

    #[test]
    fn rejects_thin_bins() {
        let m = builtin("test1_linear_gaussian").unwrap();
        let grid = AlphaGrid::single(0.01).unwrap();
        let cfg = DlrConfig::new(1000, 20, SamplerConfig::sobol()).unwrap();
        assert!(matches!(
            dlr_qbsm(&m, &grid, &cfg),
            Err(Error::SampleSize { .. })
        ));
    }

    #[test]
    fn thin_bins_warn() {
        let m = builtin("test1_linear_gaussian").unwrap();
        let grid = AlphaGrid::new(vec![0.05, 0.5]).unwrap();
        let cfg = DlrConfig::new(1000, 10, SamplerConfig::sobol()).unwrap();
        let r = dlr_qbsm(&m, &grid, &cfg).unwrap();
        assert_eq!(r.provenance.warnings.len(), 1);
        assert_eq!(r.provenance.evaluations, 1000);
    }

    #[test]
    fn theorem1_at_median() {
        let m = builtin("test1_linear_gaussian").unwrap();
        let cfg = DlrConfig::new(1 << 14, 128, SamplerConfig::sobol()).unwrap();
        let r = dlr_qbsm(&m, &AlphaGrid::single(0.5).unwrap(), &cfg).unwrap();
        let s = linear_gaussian_sobol(&[1.0; 4], &TEST1_SIGMA).unwrap();
        for (q, s) in r.results[0].q2.values.iter().zip(&s) {
            assert!((q - s).abs() < 0.02, "{:?} vs {s:?}", r.results[0].q2);
        }
    }

    #[test]
    fn dead_input() {
        let inputs =
            JointInputSpec::independent(vec![Marginal::normal(0.0, 1.0).unwrap(); 2]).unwrap();
        let m = from_linear_config(
            "dead",
            LinearModelConfig {
                coefficients: vec![1.0, 0.0],
                inputs,
            },
        )
        .unwrap();
        let cfg = DlrConfig::with_default_bins(1 << 12, SamplerConfig::sobol()).unwrap();
        let r = dlr_qbsm(&m, &AlphaGrid::single(0.5).unwrap(), &cfg).unwrap();
        let q = &r.results[0].qbar2;
        assert!(q[1] < 0.05 * q[0], "{q:?}");
    }

    #[test]
    fn constant_model_is_degenerate() {
        let inputs =
            JointInputSpec::independent(vec![Marginal::uniform(0.0, 1.0).unwrap(); 2]).unwrap();
        let m = ModelSpec::new("c", vec!["a".into(), "b".into()], inputs, |_| 3.0).unwrap();
        let cfg = DlrConfig::new(256, 16, SamplerConfig::sobol()).unwrap();
        let r = dlr_qbsm(&m, &AlphaGrid::single(0.5).unwrap(), &cfg).unwrap();
        assert!(r.results[0].q1.degenerate && r.results[0].q2.degenerate);
        assert_eq!(r.results[0].q2.values, vec![0.0, 0.0]);
    }

    #[test]
    fn ties_break_by_sample_index() {
        // Discrete input: every value repeated; the bins must be the sample
        // order within each tie class.
        let n = 8;
        let x = InputMatrix::from_raw(n, 1, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let y: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let bins = bin_quantiles(&x, &y, 0, 4, &[1.0]);
        assert_eq!(bins, vec![vec![3.0], vec![7.0], vec![2.0], vec![6.0]]);
    }

    fn provenance() -> Provenance {
        Provenance {
            model: "given".into(),
            method: QuantileMethod::Dlr,
            sampler: SamplerConfig::pseudorandom(0),
            n: None,
            bins: None,
            n_outer: None,
            n_inner: None,
            conditional_size: 0,
            evaluations: 0,
            warnings: vec![],
        }
    }

    /// Direct, unoptimized transcription used as an oracle.
    fn naive(x: &InputMatrix, y: &[f64], alpha: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
        let q = |v: &[f64]| {
            let mut s = v.to_vec();
            s.sort_by(f64::total_cmp);
            let k = (1..=s.len())
                .find(|&k| k as f64 / s.len() as f64 >= alpha - 1e-12)
                .unwrap();
            s[k - 1]
        };
        let qy = q(y);
        let size = y.len() / m;
        (0..x.d())
            .map(|i| {
                let mut pairs: Vec<(f64, usize)> = x.rows().map(|r| r[i]).zip(0..).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let (mut a1, mut a2) = (0.0, 0.0);
                for bin in pairs.chunks(size) {
                    let ys: Vec<f64> = bin.iter().map(|&(_, k)| y[k]).collect();
                    let diff = qy - q(&ys);
                    a1 += diff.abs();
                    a2 += diff * diff;
                }
                (a1 / m as f64, a2 / m as f64)
            })
            .unzip()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_naive_transcription(seed in 0u64..1000, a in 1u32..10) {
            let alpha = a as f64 / 10.0;
            let u = random_points(240, 3, seed).unwrap();
            let x = InputMatrix::from_raw(240, 3, u.values().to_vec());
            let y: Vec<f64> = x.rows().map(|r| (r[0] * 4.0).floor() + r[1] * r[1] - r[2]).collect();
            let names = vec!["a".into(), "b".into(), "c".into()];
            let grid = AlphaGrid::single(alpha).unwrap();
            let r = dlr_from_sample(&x, &y, &grid, 12, names, provenance()).unwrap();
            let (q1, q2) = naive(&x, &y, alpha, 12);
            prop_assert_eq!(&r.results[0].qbar1, &q1);
            prop_assert_eq!(&r.results[0].qbar2, &q2);
        }
    }
}
