//! Surrogate regressors for the reliability function and the
//! train/test/cross-validation protocol used to compare them.

pub mod eval;
pub mod kernel;
mod linalg;
pub mod linear;
pub mod knn;
pub mod mlp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use linalg::Singular;

use kernel::KernelRidgeModel;
use knn::KnnModel;
use linear::{DescentOptions, LinearModel};
use mlp::{MlpConfig, MlpModel};

/// A model family with its hyperparameters. Penalties use the unscaled
/// objectives documented in [`linear`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelSpec {
    Linear { fit_intercept: bool },
    Ridge { lambda: f64, fit_intercept: bool },
    Lasso { lambda: f64 },
    ElasticNet { l1: f64, l2: f64 },
    Polynomial,
    BayesianRidge,
    Huber { epsilon: f64, lambda: f64 },
    KernelRidge { lambda: f64, gamma: Option<f64>, max_rows: usize },
    Knn { k: usize },
    Mlp(MlpConfig),
}

pub const KERNEL_RIDGE_MAX_ROWS: usize = 4000;

impl ModelSpec {
    /// Every native family with default hyperparameters, in display order.
    pub fn all_native() -> Vec<ModelSpec> {
        [
            "linear",
            "ridge",
            "lasso",
            "elastic-net",
            "polynomial",
            "bayesian-ridge",
            "huber",
            "kernel-ridge",
            "knn",
            "mlp",
        ]
        .iter()
        .map(|n| n.parse().expect("built-in name"))
        .collect()
    }

    /// Short name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Linear { .. } => "linear",
            ModelSpec::Ridge { .. } => "ridge",
            ModelSpec::Lasso { .. } => "lasso",
            ModelSpec::ElasticNet { .. } => "elastic-net",
            ModelSpec::Polynomial => "polynomial",
            ModelSpec::BayesianRidge => "bayesian-ridge",
            ModelSpec::Huber { .. } => "huber",
            ModelSpec::KernelRidge { .. } => "kernel-ridge",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Mlp(_) => "mlp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let negative = |v: f64| v.is_nan() || v < 0.0;
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{}: {what}", self.name())));
        match *self {
            ModelSpec::Ridge { lambda, .. } | ModelSpec::Lasso { lambda } if negative(lambda) => {
                bad("penalty must be non-negative")
            }
            ModelSpec::ElasticNet { l1, l2 } if negative(l1) || negative(l2) => bad("penalties must be non-negative"),
            ModelSpec::Huber { epsilon, lambda } if epsilon.is_nan() || epsilon <= 0.0 || negative(lambda) => {
                bad("epsilon must be positive and lambda non-negative")
            }
            ModelSpec::KernelRidge { lambda, .. } if negative(lambda) => bad("penalty must be non-negative"),
            ModelSpec::Knn { k: 0 } => bad("K must be at least 1"),
            _ => Ok(()),
        }
    }

    /// Sets the seed of seeded families; others are unchanged.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let ModelSpec::Mlp(cfg) = &mut self {
            cfg.seed = seed;
        }
        self
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "lr" => ModelSpec::Linear { fit_intercept: true },
            "ridge" | "rr" => ModelSpec::Ridge {
                lambda: 1.0,
                fit_intercept: true,
            },
            "lasso" | "la" => ModelSpec::Lasso { lambda: 0.1 },
            "elastic-net" | "elasticnet" | "en" => ModelSpec::ElasticNet { l1: 0.5, l2: 0.1 },
            "polynomial" | "pr" => ModelSpec::Polynomial,
            "bayesian-ridge" | "br" => ModelSpec::BayesianRidge,
            "huber" | "hr" => ModelSpec::Huber {
                epsilon: 1.35,
                lambda: 1e-4,
            },
            "kernel-ridge" | "kr" => ModelSpec::KernelRidge {
                lambda: 1.0,
                gamma: None,
                max_rows: KERNEL_RIDGE_MAX_ROWS,
            },
            "knn" => ModelSpec::Knn { k: 5 },
            "mlp" | "ann" => ModelSpec::Mlp(MlpConfig::default()),
            other => return Err(Error::InvalidArgument(format!("unknown model name `{other}`"))),
        };
        Ok(spec)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a comma-separated model list; `all-native` expands to every family.
pub fn parse_model_list(list: &str) -> Result<Vec<ModelSpec>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all-native") || item.eq_ignore_ascii_case("all") {
            out.extend(ModelSpec::all_native());
        } else {
            out.push(item.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty model list".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameters", rename_all = "kebab-case")]
pub enum FittedParameters {
    Linear(LinearModel),
    Polynomial(LinearModel),
    KernelRidge(KernelRidgeModel),
    Knn(KnnModel),
    Mlp(MlpModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub dimension: usize,
    pub parameters: FittedParameters,
}

impl FittedModel {
    pub fn fit(spec: &ModelSpec, x: &[Vec<f64>], y: &[f64]) -> Result<FittedModel> {
        spec.validate()?;
        if x.is_empty() {
            return Err(Error::InvalidArgument("cannot fit on an empty training set".into()));
        }
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        let dimension = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != dimension) {
            return Err(Error::LengthMismatch {
                expected: dimension,
                actual: bad.len(),
            });
        }
        use FittedParameters as P;
        let parameters = match spec {
            ModelSpec::Linear { fit_intercept } => {
                P::Linear(linear::fit_ridge(x, y, 0.0, *fit_intercept, Singular::Fail)?)
            }
            ModelSpec::Ridge { lambda, fit_intercept } => {
                P::Linear(linear::fit_ridge(x, y, *lambda, *fit_intercept, Singular::Fail)?)
            }
            ModelSpec::Lasso { lambda } => {
                P::Linear(linear::coordinate_descent(x, y, *lambda, 0.0, DescentOptions::default())?.0)
            }
            ModelSpec::ElasticNet { l1, l2 } => {
                P::Linear(linear::coordinate_descent(x, y, *l1, *l2, DescentOptions::default())?.0)
            }
            ModelSpec::Polynomial => P::Polynomial(linear::fit_polynomial(x, y)?),
            ModelSpec::BayesianRidge => P::Linear(linear::fit_bayesian_ridge(x, y)?),
            ModelSpec::Huber { epsilon, lambda } => P::Linear(linear::fit_huber(x, y, *epsilon, *lambda)?),
            ModelSpec::KernelRidge {
                lambda,
                gamma,
                max_rows,
            } => P::KernelRidge(kernel::fit_kernel_ridge(x, y, *lambda, *gamma, *max_rows)?),
            ModelSpec::Knn { k } => P::Knn(KnnModel::new(*k, x, y)),
            ModelSpec::Mlp(cfg) => P::Mlp(mlp::fit_mlp(x, y, cfg)?),
        };
        Ok(FittedModel {
            spec: spec.clone(),
            dimension,
            parameters,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::LengthMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        match &self.parameters {
            FittedParameters::Linear(m) => m.predict(x),
            FittedParameters::Polynomial(m) => {
                m.predict(&linear::expand_polynomial(x, 2).expect("degree 2 is supported"))
            }
            FittedParameters::KernelRidge(m) => m.predict(x),
            FittedParameters::Knn(m) => m.predict(x),
            FittedParameters::Mlp(m) => m.predict(x),
        }
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}
