//! Residuals and the two routes for fixing the convergence-control constants.
//!
//! * **Collocation** forces `R(x_i; C) = 0` at `m` points and solves the
//!   square system with damped Newton and a forward-difference Jacobian. More
//!   points than constants switches to Gauss–Newton on the point residuals.
//! * **Least squares** minimizes `J(C) = ∫_a^b R(x; C)² dx` with Nelder–Mead.
//!   `R` is a polynomial, so `J` is integrated exactly.
//!
//! The residual always uses the full truncated series of `γ`, not the
//! linearization the iteration is built from.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::opia::{iterate, linear_part, OpiaError};
use crate::poly::{PolyError, Polynomial};
use crate::problem::EmdenFowlerProblem;
use crate::scalar::Scalar;

/// Newton stops once every point residual is below this.
pub const ROOT_TOL: f64 = 1e-12;
pub const MAX_NEWTON_ITERS: usize = 100;
/// Relative forward-difference step.
pub const FD_STEP: f64 = 1e-7;
pub const SIMPLEX_DIAMETER_TOL: f64 = 1e-10;
pub const SIMPLEX_SPREAD_TOL: f64 = 1e-16;
pub const MAX_OBJECTIVE_EVALS: usize = 2000;
/// Default Newton start value for every constant.
pub const DEFAULT_INIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Iteration(#[from] OpiaError),
    #[error("residual needs y'(0) = 0: {0}")]
    Residual(#[from] PolyError),
    #[error(
        "singular Jacobian at Newton step {iteration} for collocation points {}",
        fmt_points(points)
    )]
    SingularJacobian { points: Vec<f64>, iteration: usize },
    #[error("no convergence after {} iterations (max point residual {:e})", best.iterations, best.max_point_residual.unwrap_or(f64::NAN))]
    NoConvergence { best: Box<FitResult> },
    #[error("invalid collocation points: {0}")]
    InvalidPoints(String),
    #[error("expected {expected} constants, got {got}")]
    ConstantCount { expected: usize, got: usize },
    #[error("interval [{0}, {1}] is empty or reversed")]
    InvalidInterval(f64, f64),
}

fn fmt_points(points: &[f64]) -> String {
    let items: Vec<String> = points.iter().map(|p| format!("{p}")).collect();
    format!("({})", items.join(", "))
}

/// Residual polynomial `R(x; C)` of an approximant.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual<T> {
    pub poly: Polynomial<T>,
    pub problem: String,
    /// Order and constants of the approximant, when it came from a trace.
    pub order: Option<usize>,
    pub constants: Vec<T>,
}

impl<T: Scalar> Residual<T> {
    /// `max |R|` over `samples + 1` evenly spaced points of `[a, b]`.
    pub fn max_abs_on(&self, a: f64, b: f64, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.poly.eval_f64(a + (b - a) * i as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// `R = y'' + (k/x) y' + β γ(y) + g`, truncated to `cap`.
pub fn residual<T: Scalar>(
    y: &Polynomial<T>,
    p: &EmdenFowlerProblem<T>,
    cap: usize,
) -> Result<Residual<T>, OptimizeError> {
    let lin = linear_part(y, &p.k)?;
    let nonlinear = p.beta.mul_truncated(&p.gamma.compose(y, cap), cap);
    let poly = (&(&lin + &nonlinear) + &p.g).truncate(cap);
    Ok(Residual {
        poly,
        problem: p.name.clone(),
        order: None,
        constants: Vec::new(),
    })
}

/// Residual of the order-`m` approximant built from `constants`.
pub fn approximant_residual<T: Scalar>(
    p: &EmdenFowlerProblem<T>,
    m: usize,
    constants: &[T],
    cap: usize,
) -> Result<Residual<T>, OptimizeError> {
    let trace = iterate(p, m, constants, cap)?;
    let mut r = residual(trace.approximant(), p, cap)?;
    r.order = Some(m);
    r.constants = constants.to_vec();
    Ok(r)
}

/// `J(C) = ∫_a^b R(x; C)² dx`, integrated exactly.
pub fn objective_j<T: Scalar>(
    constants: &[T],
    p: &EmdenFowlerProblem<T>,
    m: usize,
    cap: usize,
    a: f64,
    b: f64,
) -> Result<T, OptimizeError> {
    if !(a <= b) {
        return Err(OptimizeError::InvalidInterval(a, b));
    }
    let r = approximant_residual(p, m, constants, cap)?.poly;
    Ok((&r * &r).definite_integral(&T::from_f64(a), &T::from_f64(b))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Collocation,
    LeastSquares,
}

impl fmt::Display for FitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMode::Collocation => "collocation",
            FitMode::LeastSquares => "least_squares",
        })
    }
}

impl FromStr for FitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "collocation" => Ok(FitMode::Collocation),
            "least_squares" | "least-squares" | "ls" => Ok(FitMode::LeastSquares),
            other => Err(format!(
                "unknown fit mode `{other}` (expected collocation or least_squares)"
            )),
        }
    }
}

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ResidualTolerance,
    StepTolerance,
    SimplexDiameter,
    ObjectiveSpread,
    IterationLimit,
    LineSearchFailed,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::ResidualTolerance => "residual_tolerance",
            StopReason::StepTolerance => "step_tolerance",
            StopReason::SimplexDiameter => "simplex_diameter",
            StopReason::ObjectiveSpread => "objective_spread",
            StopReason::IterationLimit => "iteration_limit",
            StopReason::LineSearchFailed => "line_search_failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub constants: Vec<f64>,
    pub mode: FitMode,
    /// `J(C)` over the fit interval.
    pub objective: f64,
    /// Newton iterations or objective evaluations.
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    /// Collocation points (empty in least-squares mode).
    pub points: Vec<f64>,
    /// `max |R(x_i; C)|` over the collocation points.
    pub max_point_residual: Option<f64>,
    pub interval: (f64, f64),
}

impl FitResult {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let list = |v: &[f64]| v.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(out, "mode = {}", self.mode);
        let _ = writeln!(out, "constants = [{}]", list(&self.constants));
        let _ = writeln!(out, "objective_j = {:?}", self.objective);
        let _ = writeln!(out, "interval = [{:?}, {:?}]", self.interval.0, self.interval.1);
        let _ = writeln!(out, "points = [{}]", list(&self.points));
        if let Some(r) = self.max_point_residual {
            let _ = writeln!(out, "max_point_residual = {r:?}");
        }
        let _ = writeln!(out, "iterations = {}", self.iterations);
        let _ = writeln!(out, "converged = {}", self.converged);
        let _ = writeln!(out, "stop = {}", self.stop);
        out
    }
}

/// `m` equally spaced interior points of `[a, b]`.
pub fn default_points(m: usize, a: f64, b: f64) -> Vec<f64> {
    (1..=m).map(|i| a + (b - a) * i as f64 / (m + 1) as f64).collect()
}

/// The map `C ↦ (R(x_1; C), ..., R(x_n; C))`.
#[derive(Debug, Clone)]
pub struct CollocationSystem<'a> {
    pub problem: &'a EmdenFowlerProblem<f64>,
    pub order: usize,
    pub cap: usize,
    pub points: Vec<f64>,
}

impl<'a> CollocationSystem<'a> {
    pub fn new(
        problem: &'a EmdenFowlerProblem<f64>,
        order: usize,
        cap: usize,
        points: Vec<f64>,
    ) -> Result<Self, OptimizeError> {
        let (a, b) = problem.domain;
        if points.len() < order {
            return Err(OptimizeError::InvalidPoints(format!(
                "need at least {order} points, got {}",
                points.len()
            )));
        }
        for (i, &x) in points.iter().enumerate() {
            if !(x > a && x < b) {
                return Err(OptimizeError::InvalidPoints(format!("{x} is not inside ({a}, {b})")));
            }
            if points[..i].contains(&x) {
                return Err(OptimizeError::InvalidPoints(format!("{x} repeated")));
            }
        }
        Ok(CollocationSystem {
            problem,
            order,
            cap,
            points,
        })
    }

    pub fn residuals(&self, c: &[f64]) -> Result<DVector<f64>, OptimizeError> {
        let r = approximant_residual(self.problem, self.order, c, self.cap)?.poly;
        Ok(DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|&x| r.eval(&x)),
        ))
    }

    /// Forward differences with step `FD_STEP · max(|c_j|, 1)`.
    pub fn forward_jacobian(&self, c: &[f64], f0: &DVector<f64>) -> Result<DMatrix<f64>, OptimizeError> {
        let mut jac = DMatrix::zeros(self.points.len(), c.len());
        let mut shifted = c.to_vec();
        for j in 0..c.len() {
            let h = FD_STEP * c[j].abs().max(1.0);
            shifted[j] = c[j] + h;
            let f1 = self.residuals(&shifted)?;
            jac.set_column(j, &((f1 - f0) / h));
            shifted[j] = c[j];
        }
        Ok(jac)
    }
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fixes the constants from `R(x_i; C) = 0`.
///
/// With exactly `m` points this is damped Newton; with more points it is
/// Gauss–Newton on the point residuals (converged when the step stalls).
pub fn solve_collocation(
    p: &EmdenFowlerProblem<f64>,
    m: usize,
    cap: usize,
    points: &[f64],
    init: &[f64],
) -> Result<FitResult, OptimizeError> {
    if init.len() != m {
        return Err(OptimizeError::ConstantCount {
            expected: m,
            got: init.len(),
        });
    }
    let sys = CollocationSystem::new(p, m, cap, points.to_vec())?;
    let square = points.len() == m;

    let mut c = DVector::from_column_slice(init);
    let mut f = sys.residuals(c.as_slice())?;
    let mut iterations = 0;
    let stop = loop {
        if max_abs(&f) < ROOT_TOL {
            break StopReason::ResidualTolerance;
        }
        if iterations >= MAX_NEWTON_ITERS {
            break StopReason::IterationLimit;
        }
        let jac = sys.forward_jacobian(c.as_slice(), &f)?;
        let step = if square {
            jac.lu().solve(&(-&f))
        } else {
            jac.svd(true, true).solve(&(-&f), 1e-14).ok()
        };
        let step = match step {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => {
                return Err(OptimizeError::SingularJacobian {
                    points: points.to_vec(),
                    iteration: iterations,
                })
            }
        };
        iterations += 1;

        // halve the step until the residual norm drops
        let norm0 = f.norm();
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-10 {
            let trial = &c + &step * lambda;
            let ft = sys.residuals(trial.as_slice())?;
            if ft.norm() < norm0 && ft.iter().all(|v| v.is_finite()) {
                accepted = Some((trial, ft));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((cn, fnew)) => {
                let small_step = (&cn - &c).amax() <= 1e-15 * (1.0 + c.amax());
                c = cn;
                f = fnew;
                if !square && small_step {
                    break StopReason::StepTolerance;
                }
            }
            None => break StopReason::LineSearchFailed,
        }
    };

    let (a, b) = p.domain;
    let constants = c.as_slice().to_vec();
    let objective = objective_j(&constants, p, m, cap, a, b)?;
    let converged = match stop {
        StopReason::ResidualTolerance => true,
        StopReason::StepTolerance => !square,
        StopReason::LineSearchFailed => !square,
        _ => false,
    };
    let result = FitResult {
        constants,
        mode: FitMode::Collocation,
        objective,
        iterations,
        converged,
        stop,
        points: points.to_vec(),
        max_point_residual: Some(max_abs(&f)),
        interval: (a, b),
    };
    if result.converged {
        Ok(result)
    } else {
        Err(OptimizeError::NoConvergence { best: Box::new(result) })
    }
}

/// Nelder–Mead on `J(C)` over `[a, b]`, reflection/expansion/contraction/shrink
/// coefficients 1, 2, 0.5, 0.5. Never returns a point worse than `init`.
pub fn minimize_objective(
    p: &EmdenFowlerProblem<f64>,
    m: usize,
    cap: usize,
    interval: (f64, f64),
    init: &[f64],
) -> Result<FitResult, OptimizeError> {
    if init.len() != m {
        return Err(OptimizeError::ConstantCount {
            expected: m,
            got: init.len(),
        });
    }
    let (a, b) = interval;
    let evals = std::cell::Cell::new(0usize);
    let f = |c: &[f64]| -> Result<f64, OptimizeError> {
        evals.set(evals.get() + 1);
        let j = objective_j(c, p, m, cap, a, b)?;
        Ok(if j.is_finite() { j } else { f64::INFINITY })
    };

    let n = m;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((init.to_vec(), f(init)?));
    for i in 0..n {
        let mut v = init.to_vec();
        v[i] += if init[i].abs() < 1.0 { 0.1 } else { 0.1 * init[i] };
        let fv = f(&v)?;
        simplex.push((v, fv));
    }

    let blend = |x: &[f64], y: &[f64], t: f64| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect() };

    let stop = loop {
        simplex.sort_by(|l, r| l.1.total_cmp(&r.1));
        let best = simplex[0].clone();
        let worst = simplex[n].clone();
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < SIMPLEX_DIAMETER_TOL {
            break StopReason::SimplexDiameter;
        }
        if worst.1 - best.1 < SIMPLEX_SPREAD_TOL {
            break StopReason::ObjectiveSpread;
        }
        if evals.get() >= MAX_OBJECTIVE_EVALS {
            break StopReason::IterationLimit;
        }

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        // reflection: centroid + 1·(centroid - worst)
        let xr = blend(&centroid, &worst.0, -1.0);
        let fr = f(&xr)?;
        if fr < best.1 {
            let xe = blend(&centroid, &worst.0, -2.0);
            let fe = f(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = blend(&centroid, &xr, 0.5);
            let fc = f(&xc)?;
            (xc, fc)
        } else {
            let xc = blend(&centroid, &worst.0, 0.5);
            let fc = f(&xc)?;
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        for vertex in simplex.iter_mut().skip(1) {
            let v = blend(&best.0, &vertex.0, 0.5);
            let fv = f(&v)?;
            *vertex = (v, fv);
        }
    };

    simplex.sort_by(|l, r| l.1.total_cmp(&r.1));
    let (constants, objective) = simplex.swap_remove(0);
    Ok(FitResult {
        constants,
        mode: FitMode::LeastSquares,
        objective,
        iterations: evals.get(),
        converged: stop != StopReason::IterationLimit,
        stop,
        points: Vec::new(),
        max_point_residual: None,
        interval,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitOptions {
    pub points: Option<Vec<f64>>,
    pub init: Option<Vec<f64>>,
    /// Integration interval for `J`; defaults to the problem domain.
    pub interval: Option<(f64, f64)>,
}

/// Dispatches to [`solve_collocation`] or [`minimize_objective`].
pub fn fit_constants(
    p: &EmdenFowlerProblem<f64>,
    m: usize,
    cap: usize,
    mode: FitMode,
    options: &FitOptions,
) -> Result<FitResult, OptimizeError> {
    let (a, b) = options.interval.unwrap_or(p.domain);
    let init = options.init.clone().unwrap_or_else(|| vec![DEFAULT_INIT; m]);
    match mode {
        FitMode::Collocation => {
            let points = options.points.clone().unwrap_or_else(|| default_points(m, a, b));
            solve_collocation(p, m, cap, &points, &init)
        }
        FitMode::LeastSquares => minimize_objective(p, m, cap, (a, b), &init),
    }
}
