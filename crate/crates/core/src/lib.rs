//! Quantile-based global sensitivity analysis.
//!
//! Measures how strongly fixing one input shifts the `alpha`-quantile of a
//! model output, with a single-sample binning estimator, a double-loop
//! reference estimator and variance-based Sobol' indices for comparison.

// Small dense matrix code reads better with explicit (i, j) indices.
#![allow(clippy::needless_range_loop)]

pub mod analytic;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod models;
pub mod sampling;

pub use distributions::{InputMatrix, JointInputSpec, Marginal};
pub use empirical::SampleVector;
pub use error::{Error, Result};
pub use models::{builtin, ModelSpec};
pub use sampling::{PointSet, SamplerConfig, SamplerKind};
