//! First-order optimal perturbation iteration.
//!
//! Each step solves the linear correction equation
//!
//! ```text
//! (y_c)'' = -( y_n'' + (k/x) y_n' + β(x) [γ(c) + γ'(c) (y_n - c)] + g(x) ),
//! (y_c)(0) = (y_c)'(0) = 0,
//! ```
//!
//! where `c = y_n(0)` is the point the nonlinearity is linearized about
//! (always the initial value, since every iterate keeps the initial
//! conditions). For `γ(y) = y` and for `γ = e^y` with `y(0) = 0` this is
//! the literal linear part of the nonlinearity; re-centering at `c` keeps
//! `γ = y^s` (`s >= 2`) from collapsing to zero.
//!
//! The iterates are then
//!
//! ```text
//! y_{n+1} = y_n + (C_0 + ... + C_n) (y_c)_n
//! ```
//!
//! with the free constants `C_i` fixed later by [`crate::optimize`].
//!
//! Only the first-order algorithm is implemented. The second-order variant
//! keeps quadratic terms in `(y_c)_n`, which makes the correction equation
//! nonlinear; it is left as future work.

use std::fmt::Write as _;

use thiserror::Error;

use crate::poly::{PolyError, Polynomial};
use crate::problem::{EmdenFowlerProblem, ProblemIssue};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpiaError {
    #[error("iterate breaks the initial-condition invariant: {0}")]
    InternalInvariantBreach(PolyError),
    #[error("invalid problem: {0:?}")]
    InvalidProblem(Vec<ProblemIssue>),
    #[error("expected {expected} constants, got {got}")]
    ConstantCount { expected: usize, got: usize },
    #[error("order must be at least 1")]
    ZeroOrder,
}

/// Default degree cap for an order-`m` run.
pub fn default_degree_cap(m: usize) -> usize {
    4 * (m + 1)
}

/// Lowest-degree polynomial meeting both initial conditions.
pub fn initial_guess<T: Scalar>(p: &EmdenFowlerProblem<T>) -> Polynomial<T> {
    Polynomial::new(vec![p.y0.clone(), p.yp0.clone()])
}

/// `y'' + (k/x) y'`; the division needs `y'(0) = 0` whenever `k != 0`.
pub(crate) fn linear_part<T: Scalar>(y: &Polynomial<T>, k: &T) -> Result<Polynomial<T>, PolyError> {
    let d1 = y.differentiate();
    let d2 = d1.differentiate();
    if k.is_zero() {
        return Ok(d2);
    }
    Ok(&d2 + &d1.divide_by_x()?.scale(k))
}

/// The correction `(y_c)_n` for iterate `y_n`, truncated to `cap`.
pub fn opia1_correction<T: Scalar>(
    y_n: &Polynomial<T>,
    p: &EmdenFowlerProblem<T>,
    cap: usize,
) -> Result<Polynomial<T>, OpiaError> {
    let lin = linear_part(y_n, &p.k).map_err(OpiaError::InternalInvariantBreach)?;
    let c = y_n.constant_term();
    let (g0, g1) = p.gamma.value_and_slope(&c);
    // γ(c) + γ'(c)(y_n - c)
    let shifted = &y_n.scale(&g1) + &Polynomial::constant(g0 - g1 * c);
    let nonlinear = p.beta.mul_truncated(&shifted, cap);
    let rhs = -(&(&lin + &nonlinear) + &p.g);
    Ok(rhs.double_antiderivative_zero_ic().truncate(cap))
}

/// Iterates `y_0..y_m` and corrections for a fixed constants vector.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace<T> {
    pub iterates: Vec<Polynomial<T>>,
    pub corrections: Vec<Polynomial<T>>,
    pub constants: Vec<T>,
    pub order: usize,
    pub degree_cap: usize,
}

impl<T: Scalar> IterationTrace<T> {
    /// `y_m`.
    pub fn approximant(&self) -> &Polynomial<T> {
        self.iterates.last().expect("trace always holds y_0")
    }

    /// Partial sum `C_0 + ... + C_n` weighting correction `n`.
    pub fn weight(&self, n: usize) -> T {
        self.constants[..=n].iter().cloned().fold(T::zero(), |a, c| a + c)
    }

    /// Plain-text dump, one tagged coefficient list per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "order = {}", self.order);
        let _ = writeln!(out, "degree_cap = {}", self.degree_cap);
        let cs: Vec<String> = self.constants.iter().map(Scalar::render).collect();
        let _ = writeln!(out, "constants = [{}]", cs.join(", "));
        for (n, y) in self.iterates.iter().enumerate() {
            let _ = writeln!(out, "y{n} = {y}");
        }
        for (n, c) in self.corrections.iter().enumerate() {
            let _ = writeln!(out, "yc{n} = {c}");
        }
        out
    }
}

/// Runs `m` steps from the initial guess with weights `C_0 + ... + C_n`.
pub fn iterate<T: Scalar>(
    p: &EmdenFowlerProblem<T>,
    m: usize,
    constants: &[T],
    cap: usize,
) -> Result<IterationTrace<T>, OpiaError> {
    if m == 0 {
        return Err(OpiaError::ZeroOrder);
    }
    if constants.len() != m {
        return Err(OpiaError::ConstantCount {
            expected: m,
            got: constants.len(),
        });
    }
    p.validate().map_err(OpiaError::InvalidProblem)?;

    let mut iterates = Vec::with_capacity(m + 1);
    let mut corrections = Vec::with_capacity(m);
    let mut y = initial_guess(p).truncate(cap);
    let mut weight = T::zero();
    for c in constants {
        let corr = opia1_correction(&y, p, cap)?;
        weight = weight + c.clone();
        let next = (&y + &corr.scale(&weight)).truncate(cap);
        iterates.push(std::mem::replace(&mut y, next));
        corrections.push(corr);
    }
    iterates.push(y);
    Ok(IterationTrace {
        iterates,
        corrections,
        constants: constants.to_vec(),
        order: m,
        degree_cap: cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::catalog_default;
    use crate::scalar::Rational;
    use crate::series::PowerSeries;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn example1() -> EmdenFowlerProblem<Rational> {
        catalog_default("example1").unwrap().problem
    }

    fn isothermal() -> EmdenFowlerProblem<Rational> {
        catalog_default("isothermal").unwrap().problem
    }

    #[test]
    fn initial_guesses() {
        assert_eq!(initial_guess(&example1()), Polynomial::constant(q(1, 1)));
        assert!(initial_guess(&isothermal()).is_zero());
        let mut p = example1();
        p.y0 = q(2, 1);
        assert_eq!(initial_guess(&p), Polynomial::constant(q(2, 1)));
    }

    #[test]
    fn first_corrections_are_exact() {
        let c = opia1_correction(&Polynomial::constant(q(1, 1)), &example1(), 20).unwrap();
        assert_eq!(c, Polynomial::new(vec![q(0, 1), q(0, 1), q(3, 1), q(0, 1), q(1, 3)]));
        let c = opia1_correction(&Polynomial::zero(), &isothermal(), 20).unwrap();
        assert_eq!(c, Polynomial::monomial(q(-1, 2), 2));
    }

    #[test]
    fn trivial_linear_problem_has_zero_correction() {
        let mut p = example1();
        p.beta = Polynomial::zero();
        let y0 = initial_guess(&p);
        assert!(opia1_correction(&y0, &p, 10).unwrap().is_zero());
    }

    #[test]
    fn first_iterate_example1() {
        let c = q(7, 5);
        let t = iterate(&example1(), 1, std::slice::from_ref(&c), 8).unwrap();
        let expected = &Polynomial::constant(q(1, 1))
            + &Polynomial::new(vec![q(0, 1), q(0, 1), q(3, 1), q(0, 1), q(1, 3)]).scale(&c);
        assert_eq!(t.approximant(), &expected);
        assert_eq!(t.iterates.len(), 2);
        assert_eq!(t.corrections.len(), 1);
    }

    #[test]
    fn zero_constants_freeze_the_guess() {
        for p in [example1(), isothermal()] {
            let t = iterate(&p, 3, &[q(0, 1), q(0, 1), q(0, 1)], 16).unwrap();
            assert_eq!(t.approximant(), &initial_guess(&p));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            iterate(&example1(), 2, &[q(1, 1)], 12),
            Err(OpiaError::ConstantCount { expected: 2, got: 1 })
        );
        assert_eq!(iterate(&example1(), 0, &[], 12), Err(OpiaError::ZeroOrder));
        let mut p = example1();
        p.yp0 = q(1, 1);
        assert!(matches!(
            iterate(&p, 1, &[q(1, 1)], 12),
            Err(OpiaError::InvalidProblem(_))
        ));
    }

    #[test]
    fn nonzero_slope_iterate_is_an_invariant_breach() {
        let y = Polynomial::from_i64s(&[1, 1]);
        assert_eq!(
            opia1_correction(&y, &example1(), 10),
            Err(OpiaError::InternalInvariantBreach(PolyError::NonzeroConstantTerm))
        );
    }

    #[test]
    fn power_nonlinearity_is_recentered() {
        // y'' + (2/x) y' + y^5 = 0, y(0) = 1: linearized 1 + 5(y - 1) at y = 1
        let mut p = example1();
        p.beta = Polynomial::constant(q(1, 1));
        p.gamma = PowerSeries::power(5);
        let c = opia1_correction(&Polynomial::constant(q(1, 1)), &p, 10).unwrap();
        assert_eq!(c, Polynomial::monomial(q(-1, 2), 2));
    }

    #[test]
    fn fixed_point_when_iterate_solves_the_equation() {
        // β = 0 and g chosen so y = 1 + x^2 is an exact solution
        let mut p = example1();
        p.beta = Polynomial::zero();
        let y = Polynomial::from_i64s(&[1, 0, 1]);
        p.g = -linear_part(&y, &p.k).unwrap();
        let c = opia1_correction(&y, &p, 10).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn degree_growth_is_bounded() {
        let p = example1();
        let t = iterate(&p, 4, &[q(1, 3), q(1, 4), q(1, 5), q(1, 6)], 100).unwrap();
        for w in t.iterates.windows(2) {
            let d0 = w[0].degree().finite().unwrap();
            let d1 = w[1].degree().finite().unwrap();
            assert!(d1 <= d0 + 4);
        }
        let capped = iterate(&p, 4, &[q(1, 3), q(1, 4), q(1, 5), q(1, 6)], 6).unwrap();
        assert!(capped.approximant().degree().finite().unwrap() <= 6);
    }

    #[test]
    fn dump_lists_every_polynomial() {
        let t = iterate(&example1(), 2, &[q(1, 1), q(1, 1)], 12).unwrap();
        let d = t.dump();
        assert!(d.contains("y0 = rational:[1]"));
        assert!(d.contains("yc0 = rational:[0, 0, 3, 0, 1/3]"));
        assert!(d.contains("y2 = "));
        assert_eq!(d.lines().count(), 3 + 3 + 2);
    }
}
