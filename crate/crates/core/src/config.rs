//! TOML run configuration.
//!
//! ```toml
//! schema = 1
//!
//! [problem]
//! catalog = "example1"      # optional base; other keys override it
//! k = 2
//! beta = [-6, 0, -4]
//! gamma = "power:1"
//! g = []
//! y0 = 1
//! yp0 = 0
//! domain = [0.0, 1.0]
//!
//! [solver]
//! order = 3
//! mode = "collocation"
//! points = [0.3, 0.6, 0.9]
//! ```
//!
//! Coefficients may be integers, floats or `"p/q"` strings.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::optimize::FitMode;
use crate::poly::Polynomial;
use crate::problem::{catalog, EmdenFowlerProblem, ProblemCatalogEntry, ProblemError};
use crate::scalar::{CoefficientDomain, Scalar};
use crate::series::{PowerSeries, DEFAULT_EXP_ORDER};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{0}")]
    Syntax(String),
    #[error("unsupported schema {0} (this build reads schema 1)")]
    Schema(u32),
    #[error("problem block needs `{0}` (or a `catalog` base)")]
    MissingKey(&'static str),
    #[error("bad value for `{key}`: {reason}")]
    Value { key: &'static str, reason: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// A coefficient as written in the file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Coeff {
    pub fn to_scalar<T: Scalar>(&self) -> Result<T, String> {
        match self {
            Coeff::Int(i) => Ok(T::from_i64(*i)),
            Coeff::Float(f) => Ok(T::from_f64(*f)),
            Coeff::Text(s) => T::parse_coeff(s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub catalog: Option<String>,
    pub name: Option<String>,
    pub k: Option<Coeff>,
    pub beta: Option<Vec<Coeff>>,
    pub gamma: Option<String>,
    pub g: Option<Vec<Coeff>>,
    pub y0: Option<Coeff>,
    pub yp0: Option<Coeff>,
    pub domain: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub order: Option<usize>,
    pub degree_cap: Option<usize>,
    pub mode: Option<String>,
    pub points: Option<Vec<f64>>,
    pub init: Option<Vec<f64>>,
    pub exp_order: Option<usize>,
    pub ref_tol: Option<f64>,
    pub coefficients: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default)]
    pub problem: ProblemBlock,
    #[serde(default)]
    pub solver: SolverBlock,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema(cfg.schema));
        }
        if let Some(mode) = &cfg.solver.mode {
            mode.parse::<FitMode>().map_err(|reason| ConfigError::Value {
                key: "solver.mode",
                reason,
            })?;
        }
        if let Some(dom) = &cfg.solver.coefficients {
            dom.parse::<CoefficientDomain>().map_err(|reason| ConfigError::Value {
                key: "solver.coefficients",
                reason,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn mode(&self) -> Option<FitMode> {
        self.solver.mode.as_deref().and_then(|m| m.parse().ok())
    }

    pub fn coefficient_domain(&self) -> Option<CoefficientDomain> {
        self.solver.coefficients.as_deref().and_then(|m| m.parse().ok())
    }
}

impl ProblemBlock {
    fn overrides_equation(&self) -> bool {
        self.k.is_some()
            || self.beta.is_some()
            || self.gamma.is_some()
            || self.g.is_some()
            || self.y0.is_some()
            || self.yp0.is_some()
    }

    /// Builds the problem. A catalog base keeps its closed form only when the
    /// equation itself is left untouched (a domain change is fine).
    pub fn build<T: Scalar>(&self, exp_order: usize) -> Result<ProblemCatalogEntry<T>, ConfigError> {
        let base = match &self.catalog {
            Some(name) => Some(catalog::<T>(name, exp_order)?),
            None => None,
        };
        let coeff = |key: &'static str, c: &Option<Coeff>, fallback: Option<&T>| -> Result<T, ConfigError> {
            match (c, fallback) {
                (Some(c), _) => c.to_scalar().map_err(|reason| ConfigError::Value { key, reason }),
                (None, Some(f)) => Ok(f.clone()),
                (None, None) => Err(ConfigError::MissingKey(key)),
            }
        };
        let poly = |key: &'static str, c: &Option<Vec<Coeff>>, fallback: Option<&Polynomial<T>>| match (c, fallback) {
            (Some(list), _) => list
                .iter()
                .map(Coeff::to_scalar)
                .collect::<Result<Vec<T>, String>>()
                .map(Polynomial::new)
                .map_err(|reason| ConfigError::Value { key, reason }),
            (None, Some(f)) => Ok(f.clone()),
            (None, None) => Err(ConfigError::MissingKey(key)),
        };
        let bp = base.as_ref().map(|b| &b.problem);
        let gamma = match (&self.gamma, bp) {
            (Some(tag), _) => PowerSeries::from_tag(tag, exp_order).map_err(|e| ConfigError::Value {
                key: "gamma",
                reason: e.to_string(),
            })?,
            (None, Some(b)) => b.gamma.clone(),
            (None, None) => return Err(ConfigError::MissingKey("gamma")),
        };
        let domain = match (self.domain, bp) {
            (Some([a, b]), _) => (a, b),
            (None, Some(b)) => b.domain,
            (None, None) => (0.0, 1.0),
        };
        let name = self
            .name
            .clone()
            .or_else(|| self.catalog.clone())
            .unwrap_or_else(|| "custom".to_string());
        let problem = EmdenFowlerProblem {
            name: name.clone(),
            k: coeff("k", &self.k, bp.map(|b| &b.k))?,
            beta: poly("beta", &self.beta, bp.map(|b| &b.beta))?,
            gamma,
            g: poly("g", &self.g, bp.map(|b| &b.g)).or_else(|e| match e {
                ConfigError::MissingKey(_) => Ok(Polynomial::zero()),
                e => Err(e),
            })?,
            y0: coeff("y0", &self.y0, bp.map(|b| &b.y0))?,
            yp0: coeff("yp0", &self.yp0, bp.map(|b| &b.yp0)).or_else(|e| match e {
                ConfigError::MissingKey(_) => Ok(T::zero()),
                e => Err(e),
            })?,
            domain,
        };
        problem.ensure_valid()?;
        let exact = match base {
            Some(b) if !self.overrides_equation() => b.exact,
            Some(_) => None,
            // spelled-out catalog equation under its catalog name
            None => catalog::<T>(&name, exp_order).ok().and_then(|c| {
                let mut same = c.problem;
                same.domain = problem.domain;
                (same == problem).then_some(c.exact).flatten()
            }),
        };
        Ok(ProblemCatalogEntry { name, problem, exact })
    }
}

impl SolverBlock {
    pub fn exp_order_or_default(&self) -> usize {
        self.exp_order.unwrap_or(DEFAULT_EXP_ORDER)
    }
}
