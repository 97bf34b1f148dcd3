//! Truncated power series `γ(y) = a0 + a1 y + ... + aT y^T` for the
//! nonlinearity, and its composition with polynomial iterates.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::poly::{parse_list, Polynomial};
use crate::scalar::Scalar;

/// Default truncation order for `exp`.
pub const DEFAULT_EXP_ORDER: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("unknown nonlinearity tag `{0}` (expected power:s, exp, or custom:[a0,...])")]
    UnknownTag(String),
    #[error("bad nonlinearity spec: {0}")]
    Parse(String),
}

/// What the series represents. Known kinds have a closed form that the
/// reference integrator uses instead of the truncated sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Power(u32),
    Exp,
    Custom,
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesKind::Power(s) => write!(f, "power({s})"),
            SeriesKind::Exp => f.write_str("exp"),
            SeriesKind::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    coeffs: Vec<T>,
    kind: SeriesKind,
}

impl<T: Scalar> PowerSeries<T> {
    /// `γ(y) = y^s`.
    pub fn power(s: u32) -> Self {
        let mut coeffs = vec![T::zero(); s as usize + 1];
        coeffs[s as usize] = T::one();
        PowerSeries {
            coeffs,
            kind: SeriesKind::Power(s),
        }
    }

    /// Maclaurin series of `e^y` through `y^order`.
    pub fn exp(order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut a = T::one();
        coeffs.push(a.clone());
        for j in 1..=order {
            a = a / T::from_i64(j as i64);
            coeffs.push(a.clone());
        }
        PowerSeries {
            coeffs,
            kind: SeriesKind::Exp,
        }
    }

    /// Arbitrary coefficients `a0..aT`. An empty list is the zero series of order 0.
    pub fn custom(coeffs: Vec<T>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![T::zero()] } else { coeffs };
        PowerSeries {
            coeffs,
            kind: SeriesKind::Custom,
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> T {
        self.coeffs.get(j).cloned().unwrap_or_else(T::zero)
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    /// Truncation order `T`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Σ a_j y^j` with every intermediate product capped at degree `cap`.
    pub fn compose(&self, y: &Polynomial<T>, cap: usize) -> Polynomial<T> {
        let mut acc = Polynomial::zero();
        for a in self.coeffs.iter().rev() {
            acc = &acc.mul_truncated(y, cap) + &Polynomial::constant(a.clone());
        }
        acc.truncate(cap)
    }

    /// Termwise derivative in `y`; the order drops by one.
    pub fn derivative(&self) -> Self {
        let coeffs: Vec<T> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, a)| a.clone() * T::from_i64(j as i64))
            .collect();
        let kind = match self.kind {
            SeriesKind::Exp => SeriesKind::Exp,
            _ => SeriesKind::Custom,
        };
        let coeffs = if coeffs.is_empty() { vec![T::zero()] } else { coeffs };
        PowerSeries { coeffs, kind }
    }

    /// Value of the truncated sum at a scalar.
    pub fn eval(&self, y: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, a| acc * y.clone() + a.clone())
    }

    /// Value and slope of the truncated sum at a scalar.
    pub fn value_and_slope(&self, y: &T) -> (T, T) {
        let mut v = T::zero();
        let mut d = T::zero();
        for a in self.coeffs.iter().rev() {
            d = d * y.clone() + v.clone();
            v = v * y.clone() + a.clone();
        }
        (v, d)
    }

    /// `a·self + b·other`, keeping the longer truncation order.
    pub fn linear_combination(&self, a: &T, other: &Self, b: &T) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|j| a.clone() * self.coeff(j) + b.clone() * other.coeff(j))
            .collect();
        PowerSeries {
            coeffs,
            kind: SeriesKind::Custom,
        }
    }

    pub fn cast<U: Scalar>(&self) -> PowerSeries<U> {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|c| U::from_f64(c.to_f64())).collect(),
            kind: self.kind,
        }
    }

    /// Closed-form value when the kind has one, otherwise the truncated sum.
    pub fn value_f64(&self, y: f64) -> f64 {
        match self.kind {
            SeriesKind::Exp => y.exp(),
            SeriesKind::Power(s) => y.powi(s as i32),
            SeriesKind::Custom => self.coeffs.iter().rev().fold(0.0, |acc, a| acc * y + a.to_f64()),
        }
    }

    /// Taylor coefficients of `γ` about `center`, the first `terms` of them.
    /// Uses the closed form for `exp`, so the shift is not limited by the
    /// stored truncation order.
    pub fn taylor_about_f64(&self, center: f64, terms: usize) -> Vec<f64> {
        match self.kind {
            SeriesKind::Exp => {
                let mut out = Vec::with_capacity(terms);
                let mut a = center.exp();
                for j in 0..terms {
                    if j > 0 {
                        a /= j as f64;
                    }
                    out.push(a);
                }
                out
            }
            _ => {
                // synthetic division repeated: coefficients of p(center + t)
                let mut c: Vec<f64> = self.coeffs.iter().map(Scalar::to_f64).collect();
                let n = c.len();
                for i in 0..n {
                    for j in (i..n - 1).rev() {
                        let next = c[j + 1];
                        c[j] += center * next;
                    }
                }
                c.resize(terms.max(n), 0.0);
                c.truncate(terms);
                c
            }
        }
    }

    /// Tag accepted by the configuration layer: `power:s`, `exp`, `custom:[...]`.
    pub fn tag(&self) -> String {
        match self.kind {
            SeriesKind::Power(s) => format!("power:{s}"),
            SeriesKind::Exp => "exp".to_string(),
            SeriesKind::Custom => {
                let items: Vec<String> = self.coeffs.iter().map(Scalar::render).collect();
                format!("custom:[{}]", items.join(","))
            }
        }
    }

    /// Parses a nonlinearity tag; `exp_order` is the truncation used for `exp`.
    pub fn from_tag(tag: &str, exp_order: usize) -> Result<Self, SeriesError> {
        let tag = tag.trim();
        if tag == "exp" {
            return Ok(Self::exp(exp_order));
        }
        if let Some(s) = tag.strip_prefix("power:") {
            let s: u32 = s
                .trim()
                .parse()
                .map_err(|_| SeriesError::Parse(format!("bad exponent in `{tag}`")))?;
            return Ok(Self::power(s));
        }
        if let Some(body) = tag.strip_prefix("custom:") {
            let coeffs = parse_list(body)
                .map_err(SeriesError::Parse)?
                .iter()
                .map(|c| T::parse_coeff(c))
                .collect::<Result<Vec<_>, _>>()
                .map_err(SeriesError::Parse)?;
            return Ok(Self::custom(coeffs));
        }
        Err(SeriesError::UnknownTag(tag.to_string()))
    }
}

impl<T: Scalar> fmt::Display for PowerSeries<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (order {})", self.kind, self.order())
    }
}

impl FromStr for PowerSeries<f64> {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_tag(s, DEFAULT_EXP_ORDER)
    }
}
