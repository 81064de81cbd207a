use std::path::PathBuf;

use qbsm::analytic::AnalyticReference;
use qbsm::estimators::{
    brute_force_qbsm, convergence_study, default_bins, dlr_qbsm, sobol_analysis, AlphaGrid,
    BruteForceConfig, ConvergenceConfig, ConvergencePoint, DlrConfig, Measure, QbsmReport,
    SobolReport, StudyMethod,
};
use qbsm::models::{builtin, BUILTIN_NAMES};
use qbsm::SamplerConfig;
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, ConvergeArgs, FormatArg, MeasureArg, MethodArg, SamplerArg, SamplingArgs,
};
use crate::error::{config, CliError};
use crate::model_config::{resolve, ResolvedModel};
use crate::output::{
    config_hash, convergence_csv, provenance_line, quantile_csv, sibling, sobol_csv, to_json,
    write_all,
};

pub fn list_models() -> Result<String, CliError> {
    let mut out = String::new();
    for name in BUILTIN_NAMES {
        let m = builtin(name)?;
        out.push_str(&format!(
            "{name}\td={}\tinputs={}\t{}\n",
            m.d(),
            m.input_names().join(","),
            m.origin()
        ));
    }
    Ok(out)
}

/// `0.5`, `0.1,0.5,0.9` or `start:stop:step`.
pub fn parse_alpha(spec: &str) -> Result<AlphaGrid, CliError> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| config(format!("--alpha: '{s}' is not a number")))
    };
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(config(format!(
                "--alpha: range '{spec}' must be start:stop:step"
            )));
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        for a in [start, stop] {
            if !(a > 0.0 && a < 1.0) {
                return Err(config(format!("--alpha: alpha = {a} must lie in (0, 1)")));
            }
        }
        AlphaGrid::range(start, stop, step)
    } else {
        let values = spec.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        AlphaGrid::new(values)
    };
    grid.map_err(|e| config(format!("--alpha: {e}")))
}

/// Comma-separated budgets; `2^k` tokens allowed.
pub fn parse_ladder(spec: &str) -> Result<Vec<u64>, CliError> {
    spec.split(',')
        .map(|tok| {
            let tok = tok.trim();
            let parsed = match tok.split_once('^') {
                Some(("2", k)) => k.parse::<u32>().ok().and_then(|k| 1u64.checked_shl(k)),
                Some(_) => None,
                None => tok.parse::<u64>().ok(),
            };
            parsed
                .filter(|&b| b > 0)
                .ok_or_else(|| config(format!("--ladder: '{tok}' is not a positive budget")))
        })
        .collect()
}

fn sampler(args: &SamplingArgs) -> SamplerConfig {
    match args.sampler {
        SamplerArg::Sobol => SamplerConfig::sobol(),
        SamplerArg::Pseudorandom => SamplerConfig::pseudorandom(args.seed),
    }
}

fn resolve_bins(
    spec: &str,
    n: usize,
    grid: &AlphaGrid,
    s: SamplerConfig,
) -> Result<DlrConfig, CliError> {
    match spec {
        "auto" => Ok(DlrConfig::new(n, default_bins(n)?, s)?),
        "grid" => Ok(DlrConfig::for_grid(n, grid, s)?),
        other => {
            let m = other.parse::<usize>().map_err(|_| {
                config(format!(
                    "--m: '{other}' is not a bin count, 'auto' or 'grid'"
                ))
            })?;
            Ok(DlrConfig::new(n, m, s)?)
        }
    }
}

/// Everything that determines the numbers in an analysis. Paths are left
/// out so that relocating a run does not change its hash.
#[derive(Debug, Serialize)]
struct AnalyzeSettings<'a> {
    model: &'a str,
    method: &'a str,
    alphas: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_outer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_inner: Option<usize>,
    sampler: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct AnalyzeProvenance<'a> {
    config_hash: String,
    settings: &'a AnalyzeSettings<'a>,
    runs: Vec<&'a qbsm::estimators::Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sobol: Option<&'a qbsm::estimators::SobolProvenance>,
}

#[derive(Serialize)]
struct AnalyzeJson<'a> {
    config_hash: String,
    settings: &'a AnalyzeSettings<'a>,
    quantile_reports: &'a [QbsmReport],
    sobol: Option<&'a SobolReport>,
    analytic: Option<AnalyticReference>,
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Dlr => "dlr",
        MethodArg::Bruteforce => "bruteforce",
        MethodArg::Sobol => "sobol",
        MethodArg::All => "all",
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Vec<PathBuf>, CliError> {
    let grid = parse_alpha(&args.alpha)?;
    let resolved = resolve(&args.source)?;
    let model = &resolved.model;
    let s = sampler(&args.sampling);
    let uses = |m: MethodArg| args.method == m || args.method == MethodArg::All;

    let dlr_cfg = if uses(MethodArg::Dlr) || uses(MethodArg::Sobol) {
        Some(resolve_bins(&args.m, args.n, &grid, s)?)
    } else {
        None
    };
    let bf_cfg = if uses(MethodArg::Bruteforce) {
        Some(BruteForceConfig::new(args.n_outer, args.n_inner, s)?)
    } else {
        None
    };
    let settings = AnalyzeSettings {
        model: model.name(),
        method: method_name(args.method),
        alphas: grid.values(),
        n: dlr_cfg.map(|c| c.n()),
        m: dlr_cfg.map(|c| c.m()),
        n_outer: bf_cfg.map(|c| c.n_outer()),
        n_inner: bf_cfg.map(|c| c.n_inner()),
        sampler: s.kind.as_str(),
        seed: args.sampling.seed,
    };
    let hash = config_hash(&settings);

    let mut reports = Vec::new();
    if uses(MethodArg::Dlr) {
        reports.push(dlr_qbsm(
            model,
            &grid,
            dlr_cfg.as_ref().expect("configured above"),
        )?);
    }
    if let Some(cfg) = &bf_cfg {
        reports.push(brute_force_qbsm(model, &grid, cfg)?);
    }
    let sobol = if uses(MethodArg::Sobol) {
        let cfg = dlr_cfg.expect("configured above");
        Some(sobol_analysis(model, cfg.n(), cfg.m(), s)?)
    } else {
        None
    };

    let files = match args.format {
        FormatArg::Json => {
            let doc = AnalyzeJson {
                config_hash: hash,
                settings: &settings,
                quantile_reports: &reports,
                sobol: sobol.as_ref(),
                analytic: resolved.reference(grid.values()),
            };
            vec![(args.output.clone(), to_json(&doc))]
        }
        FormatArg::Csv => {
            let prov = AnalyzeProvenance {
                config_hash: hash,
                settings: &settings,
                runs: reports.iter().map(|r| &r.provenance).collect(),
                sobol: sobol.as_ref().map(|r| &r.provenance),
            };
            let prefix = provenance_line(&prov);
            let seed = args.sampling.seed;
            match (&sobol, reports.is_empty()) {
                (Some(sob), true) => vec![(args.output.clone(), sobol_csv(sob, seed, &prefix))],
                (Some(sob), false) => vec![
                    (args.output.clone(), quantile_csv(&reports, seed, &prefix)),
                    (
                        sibling(&args.output, "sobol"),
                        sobol_csv(sob, seed, &prefix),
                    ),
                ],
                (None, _) => vec![(args.output.clone(), quantile_csv(&reports, seed, &prefix))],
            }
        }
    };
    write_all(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[derive(Debug, Serialize)]
struct ConvergeSettings<'a> {
    model: &'a str,
    methods: Vec<&'static str>,
    alpha: f64,
    measure: &'static str,
    ladder: &'a [u64],
    replicates: usize,
    sampler: &'a str,
    seed: u64,
    reference: &'static str,
}

#[derive(Serialize)]
struct ConvergeJson<'a> {
    config_hash: String,
    settings: &'a ConvergeSettings<'a>,
    reference_values: &'a [f64],
    points: &'a [ConvergencePoint],
}

/// Reference shares: closed form when available, otherwise a DLR run with
/// at least sixteen times the largest budget.
fn convergence_reference(
    resolved: &ResolvedModel,
    alpha: f64,
    measure: Measure,
    max_budget: u64,
) -> Result<(Vec<f64>, &'static str), CliError> {
    if let Some(q) = resolved.analytic_shares(alpha, measure == Measure::Q2) {
        return Ok((q, "analytic"));
    }
    let n = (max_budget.saturating_mul(16))
        .max(1 << 18)
        .next_power_of_two();
    let n = usize::try_from(n).map_err(|_| config("--ladder: budgets too large"))?;
    let grid = AlphaGrid::single(alpha)?;
    let cfg = DlrConfig::for_grid(n, &grid, SamplerConfig::sobol())?;
    let report = dlr_qbsm(&resolved.model, &grid, &cfg)?;
    let r = &report.results[0];
    let q = match measure {
        Measure::Q1 => r.q1.values.clone(),
        Measure::Q2 => r.q2.values.clone(),
    };
    Ok((q, "dlr_high_budget"))
}

pub fn converge(args: &ConvergeArgs) -> Result<Vec<PathBuf>, CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(config(format!(
            "--alpha: alpha = {} must lie in (0, 1)",
            args.alpha
        )));
    }
    let ladder = parse_ladder(&args.ladder)?;
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config("--ladder: budgets must be strictly increasing"));
    }
    if args.replicates == 0 {
        return Err(config("--replicates must be at least 1"));
    }
    let methods: Vec<StudyMethod> = match args.method {
        MethodArg::Dlr => vec![StudyMethod::Dlr],
        MethodArg::Bruteforce => vec![StudyMethod::BruteForce],
        MethodArg::All => vec![StudyMethod::Dlr, StudyMethod::BruteForce],
        MethodArg::Sobol => {
            return Err(config(
                "--method: convergence studies support dlr, bruteforce or all",
            ))
        }
    };
    let measure = match args.measure {
        MeasureArg::Q1 => Measure::Q1,
        MeasureArg::Q2 => Measure::Q2,
    };
    let resolved = resolve(&args.source)?;
    let model = &resolved.model;
    let s = sampler(&args.sampling);
    let max_budget = *ladder.last().expect("parse_ladder rejects empty input");
    let (reference, reference_kind) =
        convergence_reference(&resolved, args.alpha, measure, max_budget)?;

    let settings = ConvergeSettings {
        model: model.name(),
        methods: methods.iter().map(|m| m.as_str()).collect(),
        alpha: args.alpha,
        measure: match measure {
            Measure::Q1 => "Q1",
            Measure::Q2 => "Q2",
        },
        ladder: &ladder,
        replicates: args.replicates,
        sampler: s.kind.as_str(),
        seed: args.sampling.seed,
        reference: reference_kind,
    };
    let mut points = Vec::new();
    for method in methods.iter().copied() {
        let cfg = ConvergenceConfig {
            method,
            alpha: args.alpha,
            measure,
            budgets: ladder.clone(),
            replicates: args.replicates,
            sampler: s,
        };
        points.extend(convergence_study(model, &cfg, &reference)?);
    }

    let hash = config_hash(&settings);
    let bytes = match args.format {
        FormatArg::Json => to_json(&ConvergeJson {
            config_hash: hash,
            settings: &settings,
            reference_values: &reference,
            points: &points,
        }),
        FormatArg::Csv => {
            #[derive(Serialize)]
            struct Prov<'a> {
                config_hash: String,
                settings: &'a ConvergeSettings<'a>,
                reference_values: &'a [f64],
            }
            let prefix = provenance_line(&Prov {
                config_hash: hash,
                settings: &settings,
                reference_values: &reference,
            });
            convergence_csv(
                model.name(),
                model.input_names(),
                args.alpha,
                &points,
                &prefix,
            )
        }
    };
    write_all(&[(args.output.clone(), bytes)])?;
    Ok(vec![args.output.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_specs() {
        assert_eq!(parse_alpha("0.5").unwrap().values(), &[0.5]);
        assert_eq!(parse_alpha("0.1, 0.9").unwrap().values(), &[0.1, 0.9]);
        assert_eq!(parse_alpha("0.01:0.99:0.01").unwrap(), AlphaGrid::default());
        let err = parse_alpha("1.5").unwrap_err().to_string();
        assert!(err.contains("1.5"), "{err}");
        assert!(parse_alpha("0:0.5:0.1").is_err());
        assert!(parse_alpha("0.1:0.5").is_err());
        assert!(parse_alpha("abc").is_err());
    }

    #[test]
    fn ladder_specs() {
        assert_eq!(parse_ladder("2^10,5000").unwrap(), vec![1024, 5000]);
        assert!(parse_ladder("3^2").is_err());
        assert!(parse_ladder("0").is_err());
        assert!(parse_ladder("2^70").is_err());
    }

    #[test]
    fn listing_is_complete() {
        let text = list_models().unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.contains("roof_truss") && text.contains("ishigami"));
    }
}
