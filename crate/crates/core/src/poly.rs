//! Dense univariate polynomials in `x`.
//!
//! Every iterate, correction term and residual is a [`Polynomial`]. The
//! representation is canonical: the coefficient vector never ends in a zero,
//! and the zero polynomial is the empty vector with degree
//! [`Degree::NegInfinity`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::{CoefficientDomain, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("constant term is nonzero, cannot divide by x")]
    NonzeroConstantTerm,
    #[error("invalid interval: lower bound exceeds upper bound")]
    InvalidInterval,
    #[error("cannot parse polynomial: {0}")]
    Parse(String),
}

/// Polynomial degree with an explicit marker for the zero polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degree {
    NegInfinity,
    Finite(usize),
}

impl Degree {
    pub fn finite(self) -> Option<usize> {
        match self {
            Degree::NegInfinity => None,
            Degree::Finite(d) => Some(d),
        }
    }
}

impl PartialOrd for Degree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Degree {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Degree::NegInfinity, Degree::NegInfinity) => Ordering::Equal,
            (Degree::NegInfinity, _) => Ordering::Less,
            (_, Degree::NegInfinity) => Ordering::Greater,
            (Degree::Finite(a), Degree::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => f.write_str("-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

/// Dense polynomial `c0 + c1 x + ... + cd x^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    /// Builds a polynomial from coefficients in ascending order, trimming
    /// trailing zeros.
    pub fn new(coeffs: Vec<T>) -> Self {
        let mut p = Polynomial { coeffs };
        p.normalize();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c x^n`.
    pub fn monomial(c: T, n: usize) -> Self {
        let mut coeffs = vec![T::zero(); n + 1];
        coeffs[n] = c;
        Self::new(coeffs)
    }

    /// The polynomial `x`.
    pub fn x() -> Self {
        Self::monomial(T::one(), 1)
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| T::from_i64(c)).collect())
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient of `x^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn constant_term(&self) -> T {
        self.coeff(0)
    }

    pub fn degree(&self) -> Degree {
        match self.coeffs.len() {
            0 => Degree::NegInfinity,
            n => Degree::Finite(n - 1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, s: &T) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    /// Product with every coefficient above `cap` discarded.
    pub fn mul_truncated(&self, other: &Self, cap: usize) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let len = (self.coeffs.len() + other.coeffs.len() - 1).min(cap + 1);
        let mut out = vec![T::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    pub fn differentiate(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * T::from_i64(i as i64))
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn integrate(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(T::zero());
        for (i, c) in self.coeffs.iter().enumerate() {
            out.push(c.clone() / T::from_i64(i as i64 + 1));
        }
        Self::new(out)
    }

    /// The unique `q` with `q'' = self`, `q(0) = 0`, `q'(0) = 0`.
    pub fn double_antiderivative_zero_ic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + 2];
        for (i, c) in self.coeffs.iter().enumerate() {
            let n = (i as i64 + 1) * (i as i64 + 2);
            out[i + 2] = c.clone() / T::from_i64(n);
        }
        Self::new(out)
    }

    /// Exact division by `x`; fails unless the constant term is zero.
    pub fn divide_by_x(&self) -> Result<Self, PolyError> {
        match self.coeffs.first() {
            None => Ok(Self::zero()),
            Some(c0) if !c0.is_zero() => Err(PolyError::NonzeroConstantTerm),
            Some(_) => Ok(Self::new(self.coeffs[1..].to_vec())),
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    /// Horner evaluation in `f64` regardless of the coefficient domain.
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    /// `∫_a^b p(x) dx`, exact in the rational domain.
    pub fn definite_integral(&self, a: &T, b: &T) -> Result<T, PolyError> {
        if a > b {
            return Err(PolyError::InvalidInterval);
        }
        let anti = self.integrate();
        Ok(anti.eval(b) - anti.eval(a))
    }

    /// Drops every coefficient above degree `cap`.
    pub fn truncate(&self, cap: usize) -> Self {
        Self::new(self.coeffs.iter().take(cap + 1).cloned().collect())
    }

    /// Converts to another coefficient domain.
    pub fn cast<U: Scalar>(&self) -> Polynomial<U> {
        Polynomial::new(self.coeffs.iter().map(|c| U::from_f64(c.to_f64())).collect())
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        Polynomial::new(self.coeffs.iter().map(Scalar::to_f64).collect())
    }

    /// Human-readable form, highest degree first, e.g. `1/3*x^4 + 3*x^2`.
    pub fn pretty(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut terms = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let c = c.render();
            terms.push(match i {
                0 => c,
                1 => format!("{c}*x"),
                _ => format!("{c}*x^{i}"),
            });
        }
        terms.join(" + ")
    }
}

impl Polynomial<crate::scalar::Rational> {
    /// Exact conversion of a float polynomial into rationals.
    pub fn from_f64_poly(p: &Polynomial<f64>) -> Self {
        p.cast()
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn add(self, rhs: Self) -> Polynomial<T> {
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = long.coeffs.clone();
        for (o, c) in out.iter_mut().zip(&short.coeffs) {
            *o = o.clone() + c.clone();
        }
        Polynomial::new(out)
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn sub(self, rhs: Self) -> Polynomial<T> {
        self + &(-rhs)
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let cap = self.coeffs.len() + rhs.coeffs.len() - 2;
        self.mul_truncated(rhs, cap)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<T: Scalar> $tr for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $m(self, rhs: Self) -> Polynomial<T> {
                (&self).$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<T: Scalar> Neg for Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        -&self
    }
}

/// Serialized form: `<domain>:[c0, c1, ...]`.
impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:[", T::DOMAIN)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&c.render())?;
        }
        f.write_str("]")
    }
}

impl<T: Scalar> FromStr for Polynomial<T> {
    type Err = PolyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tag, body) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| PolyError::Parse("missing domain tag".into()))?;
        let domain: CoefficientDomain = tag.parse().map_err(PolyError::Parse)?;
        if domain != T::DOMAIN {
            return Err(PolyError::Parse(format!(
                "domain tag `{domain}` does not match `{}`",
                T::DOMAIN
            )));
        }
        let list = parse_list(body).map_err(PolyError::Parse)?;
        let coeffs = list
            .iter()
            .map(|c| T::parse_coeff(c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(PolyError::Parse)?;
        Ok(Polynomial::new(coeffs))
    }
}

/// Splits `[a, b, c]` into its trimmed items.
pub(crate) fn parse_list(s: &str) -> Result<Vec<String>, String> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("expected a bracketed list, got `{s}`"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(inner.split(',').map(|t| t.trim().to_string()).collect())
}
