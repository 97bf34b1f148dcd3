//! Coefficient domains.
//!
//! Every polynomial, series and problem in this crate is generic over a
//! [`Scalar`]. Two domains are provided: exact rationals ([`Rational`]) for
//! symbolic-looking iterates and regression checks, and `f64` for the
//! optimization loops.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

/// Exact rational coefficient.
pub type Rational = BigRational;

/// Tag naming the coefficient domain of a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientDomain {
    Rational,
    Float,
}

impl CoefficientDomain {
    pub fn tag(self) -> &'static str {
        match self {
            CoefficientDomain::Rational => "rational",
            CoefficientDomain::Float => "float",
        }
    }
}

impl Display for CoefficientDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CoefficientDomain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "rational" | "exact" => Ok(CoefficientDomain::Rational),
            "float" | "f64" => Ok(CoefficientDomain::Float),
            other => Err(format!("unknown coefficient domain `{other}`")),
        }
    }
}

/// A coefficient field element.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const DOMAIN: CoefficientDomain;

    fn from_i64(v: i64) -> Self;

    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Exact for rationals (binary expansion of the float), identity for `f64`.
    /// Non-finite input maps to zero in the rational domain.
    fn from_f64(v: f64) -> Self;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// Parses `p/q`, an integer, or a decimal/exponent float literal.
    fn parse_coeff(s: &str) -> Result<Self, String>;

    /// Serialized form used in the tagged coefficient lists.
    fn render(&self) -> String;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f64 {
    const DOMAIN: CoefficientDomain = CoefficientDomain::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn from_rational(r: &Rational) -> Self {
        Scalar::to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_coeff(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().map_err(|_| format!("bad coefficient `{s}`"))?;
            let d: f64 = d.trim().parse().map_err(|_| format!("bad coefficient `{s}`"))?;
            if d == 0.0 {
                return Err(format!("zero denominator in `{s}`"));
            }
            return Ok(n / d);
        }
        s.parse().map_err(|_| format!("bad coefficient `{s}`"))
    }

    fn render(&self) -> String {
        // Debug keeps the shortest round-trip digits and always shows a '.'
        format!("{self:?}")
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Scalar for Rational {
    const DOMAIN: CoefficientDomain = CoefficientDomain::Rational;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Self {
        Rational::from_float(v).unwrap_or_else(Rational::zero)
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_coeff(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Ok(r) = s.parse::<Rational>() {
            return Ok(r);
        }
        let v: f64 = s.parse().map_err(|_| format!("bad coefficient `{s}`"))?;
        Rational::from_float(v).ok_or_else(|| format!("non-finite coefficient `{s}`"))
    }

    fn render(&self) -> String {
        self.to_string()
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}
