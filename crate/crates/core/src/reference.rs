//! Numerical reference solutions for problems without a closed form.
//!
//! The `(k/x) y'` term is singular at the origin, so the integrator starts at
//! a small radius `x_b` from values given by a locally matched Taylor series,
//! then runs an adaptive Dormand–Prince 5(4) pair on `(y, y')`. Between
//! accepted steps the solution is interpolated by cubic Hermite from the
//! stored `y` and `y'`; inside `[0, x_b]` the series itself is used.

use std::fmt::Write as _;

use thiserror::Error;

use crate::problem::EmdenFowlerProblem;

pub const DEFAULT_SERIES_ORDER: usize = 8;
/// Bootstrap radius as a fraction of the domain length.
pub const DEFAULT_BOOTSTRAP_FRACTION: f64 = 1e-3;
pub const MIN_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("series coefficient recursion divides by zero at order {order}")]
    SeriesBreakdown { order: usize },
    #[error("step size underflow at x = {x} (h = {h:e}); stiff or blowing up")]
    StepUnderflow { x: f64, h: f64 },
    #[error("tolerance {0:e} is below the supported minimum 1e-13")]
    InvalidTolerance(f64),
    #[error("end point {x_end} must exceed the bootstrap radius {x_b}")]
    InvalidSpan { x_end: f64, x_b: f64 },
    #[error("y'(0) must vanish when k != 0")]
    SingularSlope,
}

/// Taylor coefficients `c_0..c_order` of the solution about `x = 0`.
///
/// Substituting `y = Σ c_j x^j` into the equation gives, for `j >= 2`,
/// `j (j - 1 + k) c_j = -[β γ(y) + g]_{j-2}`, and the right side only
/// involves `c_0..c_{j-2}`.
pub fn taylor_coefficients(p: &EmdenFowlerProblem<f64>, order: usize) -> Result<Vec<f64>, ReferenceError> {
    let k = p.k;
    if k != 0.0 && p.yp0 != 0.0 {
        return Err(ReferenceError::SingularSlope);
    }
    let mut c = vec![0.0; order + 1];
    c[0] = p.y0;
    if order >= 1 {
        c[1] = p.yp0;
    }
    // γ(y0 + u) = Σ t_i u^i
    let t = p.gamma.taylor_about_f64(p.y0, order + 1);
    let beta = p.beta.coeffs();
    let g = p.g.coeffs();
    for j in 2..=order {
        let n = j - 2;
        let gamma_y = compose_truncated(&t, &c[..=n], n);
        let mut rhs = g.get(n).copied().unwrap_or(0.0);
        for (i, b) in beta.iter().enumerate().take(n + 1) {
            rhs += b * gamma_y[n - i];
        }
        let denom = j as f64 * (j as f64 - 1.0 + k);
        if denom == 0.0 {
            return Err(ReferenceError::SeriesBreakdown { order: j });
        }
        c[j] = -rhs / denom;
    }
    Ok(c)
}

/// Coefficients through `x^n` of `Σ t_i u^i` with `u = Σ_{l>=1} c_l x^l`.
fn compose_truncated(t: &[f64], c: &[f64], n: usize) -> Vec<f64> {
    let mut u = vec![0.0; n + 1];
    for (l, cl) in c.iter().enumerate().skip(1).take(n) {
        u[l] = *cl;
    }
    let mut acc = vec![0.0; n + 1];
    for ti in t.iter().take(n + 1).rev() {
        let mut next = vec![0.0; n + 1];
        for (i, a) in acc.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (l, ul) in u.iter().enumerate().take(n + 1 - i).skip(1) {
                next[i + l] += a * ul;
            }
        }
        next[0] += ti;
        acc = next;
    }
    acc
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |a, ci| a * x + ci)
}

fn horner_derivative(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |a, (i, ci)| a * x + i as f64 * ci)
}

/// `(y(x_b), y'(x_b))` from the local series.
pub fn bootstrap_series(p: &EmdenFowlerProblem<f64>, x_b: f64, order: usize) -> Result<(f64, f64), ReferenceError> {
    let c = taylor_coefficients(p, order)?;
    Ok((horner(&c, x_b), horner_derivative(&c, x_b)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Defaults to `1e-3 · (b - a)` of the problem domain.
    pub bootstrap_radius: Option<f64>,
    pub series_order: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions {
            bootstrap_radius: None,
            series_order: DEFAULT_SERIES_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub tolerance: f64,
    pub bootstrap_radius: f64,
    /// Taylor coefficients used on `[0, x_b]`.
    pub series: Vec<f64>,
    pub rejected_steps: usize,
}

impl ReferenceSolution {
    /// Dense value on `[0, x_end]`; `None` outside.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let last = *self.nodes.last()?;
        if !(x >= 0.0 && x <= last) {
            return None;
        }
        if x <= self.bootstrap_radius {
            return Some(horner(&self.series, x));
        }
        let i = match self.nodes.binary_search_by(|n| n.total_cmp(&x)) {
            Ok(i) => return Some(self.values[i]),
            Err(i) => i - 1,
        };
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivatives[i] * h, self.derivatives[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        Some((2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1)
    }

    /// `x,y,yp` rows for every node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,yp\n");
        for ((x, y), d) in self.nodes.iter().zip(&self.values).zip(&self.derivatives) {
            let _ = writeln!(out, "{x:?},{y:?},{d:?}");
        }
        out
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn rhs(p: &EmdenFowlerProblem<f64>, x: f64, u: [f64; 2]) -> [f64; 2] {
    let [y, yp] = u;
    [
        yp,
        -(p.k / x) * yp - p.beta.eval_f64(x) * p.gamma.value_f64(y) - p.g.eval_f64(x),
    ]
}

/// Integrates from the bootstrap radius to `x_end` with default options.
pub fn integrate(p: &EmdenFowlerProblem<f64>, x_end: f64, tol: f64) -> Result<ReferenceSolution, ReferenceError> {
    integrate_with(p, x_end, tol, ReferenceOptions::default())
}

pub fn integrate_with(
    p: &EmdenFowlerProblem<f64>,
    x_end: f64,
    tol: f64,
    options: ReferenceOptions,
) -> Result<ReferenceSolution, ReferenceError> {
    if !(tol >= MIN_TOLERANCE) {
        return Err(ReferenceError::InvalidTolerance(tol));
    }
    let (a, b) = p.domain;
    let x_b = options.bootstrap_radius.unwrap_or(DEFAULT_BOOTSTRAP_FRACTION * (b - a));
    if !(x_end > x_b) {
        return Err(ReferenceError::InvalidSpan { x_end, x_b });
    }
    let series = taylor_coefficients(p, options.series_order)?;
    let mut u = [horner(&series, x_b), horner_derivative(&series, x_b)];
    let span = x_end - x_b;
    let h_min = 1e-14 * span;

    let mut nodes = vec![x_b];
    let mut values = vec![u[0]];
    let mut derivatives = vec![u[1]];
    let mut x = x_b;
    let mut h = (span * 1e-2).min(x_b.max(span * 1e-4));
    let mut k1 = rhs(p, x, u);
    let mut rejected = 0;

    while x < x_end {
        if x + h > x_end {
            h = x_end - x;
        }
        if h < h_min {
            return Err(ReferenceError::StepUnderflow { x, h });
        }
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut stage = u;
            for (j, kj) in k.iter().enumerate().take(s) {
                stage[0] += h * A[s][j] * kj[0];
                stage[1] += h * A[s][j] * kj[1];
            }
            k[s] = rhs(p, x + C[s] * h, stage);
        }
        let mut next = u;
        let mut err = 0.0_f64;
        for comp in 0..2 {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][comp];
                lo += B4[s] * k[s][comp];
            }
            next[comp] = u[comp] + h * hi;
            let scale = tol * (1.0 + u[comp].abs().max(next[comp].abs()));
            err = err.max((h * (hi - lo)).abs() / scale);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }

        if err <= 1.0 {
            x = if x_end - (x + h) <= 1e-15 * span { x_end } else { x + h };
            u = next;
            k1 = k[6];
            nodes.push(x);
            values.push(u[0]);
            derivatives.push(u[1]);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
        }
    }

    Ok(ReferenceSolution {
        nodes,
        values,
        derivatives,
        tolerance: tol,
        bootstrap_radius: x_b,
        series,
        rejected_steps: rejected,
    })
}
