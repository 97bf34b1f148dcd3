//! Emden–Fowler problem instances and the named catalog.
//!
//! A problem is stored in the single canonical form
//!
//! ```text
//! y'' + (k/x) y' + β(x) γ(y) + g(x) = 0,   y(0) = y0,  y'(0) = yp0,
//! ```
//!
//! so an equation written as `y'' + (2/x) y' - (4x² + 6) y = 0` is encoded
//! with `β = -(4x² + 6)` and `γ(y) = y`.

use std::fmt;

use thiserror::Error;

use crate::poly::Polynomial;
use crate::scalar::Scalar;
use crate::series::{PowerSeries, DEFAULT_EXP_ORDER};

/// Names accepted by [`catalog`].
pub const CATALOG_NAMES: [&str; 4] = ["example1", "isothermal", "lane_emden_s1", "lane_emden_s5"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemIssue {
    #[error("singular slope: k != 0 requires y'(0) = 0")]
    SingularSlope,
    #[error("empty domain: upper bound must exceed lower bound")]
    EmptyDomain,
    #[error("domain must start at x >= 0")]
    NegativeDomain,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unknown problem `{0}` (known: example1, isothermal, lane_emden_s1, lane_emden_s5)")]
    UnknownProblem(String),
    #[error("invalid problem: {}", issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid { issues: Vec<ProblemIssue> },
    #[error("closed form for `{name}` fails the ODE residual check: {residual:e} at x = {x}")]
    BadExactSolution { name: String, x: f64, residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmdenFowlerProblem<T> {
    pub name: String,
    /// Singularity strength in `(k/x) y'`.
    pub k: T,
    pub beta: Polynomial<T>,
    pub gamma: PowerSeries<T>,
    /// Source term.
    pub g: Polynomial<T>,
    pub y0: T,
    pub yp0: T,
    pub domain: (f64, f64),
}

impl<T: Scalar> EmdenFowlerProblem<T> {
    /// Every violated invariant, or `Ok` when there are none.
    pub fn validate(&self) -> Result<(), Vec<ProblemIssue>> {
        let mut issues = Vec::new();
        if !self.k.is_zero() && !self.yp0.is_zero() {
            issues.push(ProblemIssue::SingularSlope);
        }
        let (a, b) = self.domain;
        if a.is_nan() || b.is_nan() || b <= a {
            issues.push(ProblemIssue::EmptyDomain);
        }
        if a < 0.0 {
            issues.push(ProblemIssue::NegativeDomain);
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    pub fn ensure_valid(&self) -> Result<(), ProblemError> {
        self.validate().map_err(|issues| ProblemError::Invalid { issues })
    }

    pub fn cast<U: Scalar>(&self) -> EmdenFowlerProblem<U> {
        EmdenFowlerProblem {
            name: self.name.clone(),
            k: U::from_f64(self.k.to_f64()),
            beta: self.beta.cast(),
            gamma: self.gamma.cast(),
            g: self.g.cast(),
            y0: U::from_f64(self.y0.to_f64()),
            yp0: U::from_f64(self.yp0.to_f64()),
            domain: self.domain,
        }
    }

    /// Pointwise residual `y'' + (k/x) y' + β γ(y) + g` of a smooth function
    /// given its value and first two derivatives at `x > 0`, using the
    /// closed form of `γ` when one exists.
    pub fn pointwise_residual(&self, x: f64, y: f64, yp: f64, ypp: f64) -> f64 {
        ypp + self.k.to_f64() / x * yp + self.beta.eval_f64(x) * self.gamma.value_f64(y) + self.g.eval_f64(x)
    }
}

impl<T: Scalar> fmt::Display for EmdenFowlerProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: y'' + ({}/x) y' + ({}) * {} + ({}) = 0, y(0) = {}, y'(0) = {}, x in [{}, {}]",
            self.name,
            self.k.render(),
            self.beta.pretty(),
            self.gamma.tag(),
            self.g.pretty(),
            self.y0.render(),
            self.yp0.render(),
            self.domain.0,
            self.domain.1
        )
    }
}

/// Closed-form solution with its first two derivatives.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    pub value: fn(f64) -> f64,
    pub first: fn(f64) -> f64,
    pub second: fn(f64) -> f64,
    pub note: &'static str,
}

impl ExactSolution {
    /// Largest `|residual|` over `samples` points evenly spaced in `(a, b]`.
    pub fn max_residual<T: Scalar>(&self, p: &EmdenFowlerProblem<T>, samples: usize) -> (f64, f64) {
        let (a, b) = p.domain;
        let mut worst = (a, 0.0_f64);
        for i in 1..=samples {
            let x = a + (b - a) * i as f64 / samples as f64;
            let r = p
                .pointwise_residual(x, (self.value)(x), (self.first)(x), (self.second)(x))
                .abs();
            if !(r <= worst.1) {
                worst = (x, r);
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct ProblemCatalogEntry<T> {
    pub name: String,
    pub problem: EmdenFowlerProblem<T>,
    pub exact: Option<ExactSolution>,
}

/// Residual tolerance for closed forms checked at construction.
pub const EXACT_RESIDUAL_TOL: f64 = 1e-8;
const EXACT_CHECK_SAMPLES: usize = 50;

/// Looks up a named problem; `exp_order` is the truncation of `e^y` where used.
pub fn catalog<T: Scalar>(name: &str, exp_order: usize) -> Result<ProblemCatalogEntry<T>, ProblemError> {
    let two = T::from_i64(2);
    let (problem, exact) = match name {
        "example1" => (
            EmdenFowlerProblem {
                name: name.into(),
                k: two,
                beta: Polynomial::from_i64s(&[-6, 0, -4]),
                gamma: PowerSeries::power(1),
                g: Polynomial::zero(),
                y0: T::one(),
                yp0: T::zero(),
                domain: (0.0, 1.0),
            },
            Some(ExactSolution {
                value: |x| (x * x).exp(),
                first: |x| 2.0 * x * (x * x).exp(),
                second: |x| (2.0 + 4.0 * x * x) * (x * x).exp(),
                note: "y = exp(x^2)",
            }),
        ),
        "isothermal" => (
            EmdenFowlerProblem {
                name: name.into(),
                k: two,
                beta: Polynomial::constant(T::one()),
                gamma: PowerSeries::exp(exp_order),
                g: Polynomial::zero(),
                y0: T::zero(),
                yp0: T::zero(),
                domain: (0.0, 1.0),
            },
            None,
        ),
        "lane_emden_s1" => (
            EmdenFowlerProblem {
                name: name.into(),
                k: two,
                beta: Polynomial::constant(T::one()),
                gamma: PowerSeries::power(1),
                g: Polynomial::zero(),
                y0: T::one(),
                yp0: T::zero(),
                domain: (0.0, 1.0),
            },
            Some(ExactSolution {
                value: sinc,
                first: sinc_first,
                second: sinc_second,
                note: "y = sin(x)/x, value 1 at x = 0",
            }),
        ),
        "lane_emden_s5" => (
            EmdenFowlerProblem {
                name: name.into(),
                k: two,
                beta: Polynomial::constant(T::one()),
                gamma: PowerSeries::power(5),
                g: Polynomial::zero(),
                y0: T::one(),
                yp0: T::zero(),
                domain: (0.0, 1.0),
            },
            Some(ExactSolution {
                value: |x| (1.0 + x * x / 3.0).powf(-0.5),
                first: |x| -x / 3.0 * (1.0 + x * x / 3.0).powf(-1.5),
                second: |x| {
                    let u = 1.0 + x * x / 3.0;
                    -u.powf(-1.5) / 3.0 + x * x / 3.0 * u.powf(-2.5)
                },
                note: "y = (1 + x^2/3)^(-1/2)",
            }),
        ),
        other => return Err(ProblemError::UnknownProblem(other.to_string())),
    };
    problem.ensure_valid()?;
    if let Some(ex) = &exact {
        let (x, r) = ex.max_residual(&problem, EXACT_CHECK_SAMPLES);
        if !(r < EXACT_RESIDUAL_TOL) {
            return Err(ProblemError::BadExactSolution {
                name: name.into(),
                x,
                residual: r,
            });
        }
    }
    Ok(ProblemCatalogEntry {
        name: name.into(),
        problem,
        exact,
    })
}

/// [`catalog`] with the default `exp` truncation.
pub fn catalog_default<T: Scalar>(name: &str) -> Result<ProblemCatalogEntry<T>, ProblemError> {
    catalog(name, DEFAULT_EXP_ORDER)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

fn sinc_first(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        -x / 3.0 + x.powi(3) / 30.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

fn sinc_second(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        -1.0 / 3.0 + x * x / 10.0 - x.powi(4) / 168.0
    } else {
        ((2.0 - x * x) * x.sin() - 2.0 * x * x.cos()) / x.powi(3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn example1_entry() {
        let e = catalog_default::<Rational>("example1").unwrap();
        let p = &e.problem;
        assert_eq!(p.k, Rational::from_i64(2));
        assert_eq!(p.beta, Polynomial::from_i64s(&[-6, 0, -4]));
        assert_eq!(p.gamma, PowerSeries::power(1));
        assert!(p.g.is_zero());
        assert_eq!(p.y0, Rational::from_i64(1));
        assert_eq!(p.yp0, Rational::from_i64(0));
        assert_eq!(p.domain, (0.0, 1.0));
        assert!(p.validate().is_ok());
    }

    #[test]
    fn isothermal_entry() {
        let e = catalog::<f64>("isothermal", 7).unwrap();
        assert_eq!(e.problem.k, 2.0);
        assert_eq!(e.problem.beta, Polynomial::constant(1.0));
        assert_eq!(e.problem.gamma, PowerSeries::exp(7));
        assert_eq!((e.problem.y0, e.problem.yp0), (0.0, 0.0));
        assert!(e.exact.is_none());
    }

    #[test]
    fn every_entry_validates() {
        for name in CATALOG_NAMES {
            let e = catalog_default::<f64>(name).unwrap();
            assert!(e.problem.validate().is_ok(), "{name}");
            if let Some(ex) = e.exact {
                assert!(ex.max_residual(&e.problem, 50).1 < EXACT_RESIDUAL_TOL, "{name}");
            }
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            catalog_default::<f64>("nope"),
            Err(ProblemError::UnknownProblem(_))
        ));
    }

    #[test]
    fn validation_reports_all_issues() {
        let mut p = catalog_default::<f64>("example1").unwrap().problem;
        p.yp0 = 1.0;
        assert_eq!(p.validate(), Err(vec![ProblemIssue::SingularSlope]));
        p.domain = (1.0, 0.0);
        assert_eq!(
            p.validate(),
            Err(vec![ProblemIssue::SingularSlope, ProblemIssue::EmptyDomain])
        );
        p.yp0 = 0.0;
        p.domain = (-1.0, 1.0);
        assert_eq!(p.validate(), Err(vec![ProblemIssue::NegativeDomain]));
        // k = 0 permits a nonzero slope
        p.domain = (0.0, 1.0);
        p.k = 0.0;
        p.yp0 = 3.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn sinc_closed_form_at_pi() {
        let e = catalog_default::<f64>("lane_emden_s1").unwrap();
        let ex = e.exact.unwrap();
        assert!((ex.value)(std::f64::consts::PI).abs() < 1e-16);
        assert_eq!((ex.value)(0.0), 1.0);
    }

    // Independent substitution check: central differences of the closed
    // forms plugged into the ODE, without the hand-written derivatives.
    #[test]
    fn closed_forms_satisfy_ode_by_finite_differences() {
        for name in ["example1", "lane_emden_s1", "lane_emden_s5"] {
            let e = catalog_default::<f64>(name).unwrap();
            let f = e.exact.unwrap().value;
            let h = 1e-4;
            for i in 1..=20 {
                let x = i as f64 / 20.0;
                let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
                let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                let r = e.problem.pointwise_residual(x, f(x), d1, d2);
                assert!(r.abs() < 1e-5, "{name} at {x}: {r}");
            }
        }
    }
}
