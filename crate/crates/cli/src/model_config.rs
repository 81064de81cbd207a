//! Model resolution: built-in names and linear models from JSON files.

use std::path::Path;

use qbsm::analytic::{
    builtin_reference, linear_gaussian_qbar1, linear_gaussian_qbar2, linear_gaussian_reference,
    AnalyticReference,
};
use qbsm::models::{builtin, from_linear_config, LinearModelConfig, TEST1_SIGMA};
use qbsm::{JointInputSpec, Marginal, ModelSpec};
use serde::Deserialize;

use crate::args::ModelSource;
use crate::error::{config, CliError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearModelFile {
    coefficients: Vec<f64>,
    marginals: Vec<Marginal>,
    #[serde(default)]
    correlation: Option<Vec<Vec<f64>>>,
}

/// A model plus what is needed to look up its closed-form reference.
pub struct ResolvedModel {
    pub model: ModelSpec,
    /// `(coefficients, standard deviations)` for linear models with
    /// independent normal inputs.
    linear_gaussian: Option<(Vec<f64>, Vec<f64>)>,
}

impl ResolvedModel {
    /// Closed-form normalized measure at `alpha`, when available.
    pub fn analytic_shares(&self, alpha: f64, squared: bool) -> Option<Vec<f64>> {
        let (a, sigma) = self.linear_gaussian.as_ref()?;
        let q = if squared {
            linear_gaussian_qbar2(a, sigma, alpha)
        } else {
            linear_gaussian_qbar1(a, sigma, alpha)
        }
        .ok()?;
        let total: f64 = q.iter().sum();
        Some(q.into_iter().map(|v| v / total).collect())
    }

    pub fn reference(&self, alphas: &[f64]) -> Option<AnalyticReference> {
        match &self.linear_gaussian {
            Some((a, sigma)) => linear_gaussian_reference(a, sigma, alphas).ok(),
            None => builtin_reference(self.model.name(), alphas),
        }
    }
}

pub fn resolve(source: &ModelSource) -> Result<ResolvedModel, CliError> {
    match (&source.model, &source.config) {
        (Some(name), None) => {
            let model = builtin(name)?;
            let linear_gaussian = matches!(
                name.as_str(),
                "test1_linear_gaussian" | "var_portfolio_demo"
            )
            .then(|| (vec![1.0; 4], TEST1_SIGMA.to_vec()));
            Ok(ResolvedModel {
                model,
                linear_gaussian,
            })
        }
        (None, Some(path)) => load_linear_model(path),
        _ => Err(config("exactly one of --model and --config is required")),
    }
}

/// Reads `{"coefficients": [...], "marginals": [...], "correlation": [[...]]}`.
pub fn load_linear_model(path: &Path) -> Result<ResolvedModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    let file: LinearModelFile =
        serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| config(format!("{}: file name is not valid UTF-8", path.display())))?;
    let marginals: Vec<Marginal> = file
        .marginals
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            m.validated()
                .map_err(|e| config(format!("marginals[{i}]: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let sigma: Option<Vec<f64>> = marginals
        .iter()
        .map(|m| match *m {
            Marginal::Normal { sigma, .. } => Some(sigma),
            _ => None,
        })
        .collect();
    let inputs = JointInputSpec::new(marginals, file.correlation)?;
    let cfg = LinearModelConfig {
        coefficients: file.coefficients.clone(),
        inputs,
    };
    let model = from_linear_config(name, cfg)?;
    let linear_gaussian = sigma
        .filter(|_| !model.inputs().is_correlated())
        .map(|s| (file.coefficients, s));
    Ok(ResolvedModel {
        model,
        linear_gaussian,
    })
}
