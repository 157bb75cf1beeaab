//! Number tower shared by the whole pipeline.
//!
//! Two modes are supported: exact arbitrary-precision rationals
//! ([`BigRational`]) and complex double-precision floats ([`Complex64`]).
//! Every algorithm in the crate is generic over [`Scalar`], so a pipeline
//! run is single-mode by construction.

mod matrix;
mod poly;
pub mod roots;

pub use matrix::Matrix;
pub use poly::{Monomial, Poly};
pub use roots::{durand_kerner, rational_roots, roots_univariate};

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Scalar mode of a pipeline run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(format!("unknown mode `{other}` (expected exact|float)")),
        }
    }
}

/// Field element used for coefficients, matrix entries and eigenvalues.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(q: &BigRational) -> Self;

    /// `None` in exact mode.
    fn from_complex(z: Complex64) -> Option<Self>;

    /// Exact zero test. Float mode compares against `0.0` bit-for-bit.
    fn is_zero(&self) -> bool;

    /// Modulus as an `f64` (absolute value in exact mode).
    fn magnitude(&self) -> f64;

    fn to_complex(&self) -> Complex64;

    /// `Some` only in exact mode.
    fn as_rational(&self) -> Option<&BigRational>;

    /// Zero test that tolerates rounding noise in float mode.
    /// `scale` is the magnitude the value should be compared against.
    fn is_negligible(&self, scale: f64, tol: f64) -> bool {
        match Self::MODE {
            Mode::Exact => self.is_zero(),
            Mode::Float => self.magnitude() <= tol * scale.max(1.0),
        }
    }

    /// Equality in exact mode; `|a - b| <= tol * max(1, |a|, |b|)` in float mode.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match Self::MODE {
            Mode::Exact => self == other,
            Mode::Float => {
                let diff = (self.clone() - other.clone()).magnitude();
                diff <= tol * self.magnitude().max(other.magnitude()).max(1.0)
            }
        }
    }

    /// Deterministic total order: numeric order for rationals, magnitude then
    /// phase for complex values.
    fn total_cmp(&self, other: &Self) -> Ordering;

    fn is_finite(&self) -> bool;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(v)))
    }

    fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Self::one() / self.clone())
        }
    }

    fn powu(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Human-readable rendering: `p/q` for rationals, shortest round-trip
    /// decimals for floats (`re` alone when the imaginary part is zero).
    fn render(&self) -> String;

    /// JSON encoding: `"p/q"` strings for rationals, `[re, im]` for floats.
    fn to_json(&self) -> serde_json::Value;

    fn from_json(v: &serde_json::Value) -> Result<Self>;
}

impl Scalar for BigRational {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn from_complex(_: Complex64) -> Option<Self> {
        None
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn as_rational(&self) -> Option<&BigRational> {
        Some(self)
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format!("{}/{}", self.numer(), self.denom()))
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Ok(BigRational::from_integer(BigInt::from(i))),
                None => parse_rational(&n.to_string()),
            },
            other => Err(Error::Json(format!("expected exact scalar, found {other}"))),
        }
    }
}

impl Scalar for Complex64 {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn from_rational(q: &BigRational) -> Self {
        Complex64::new(q.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn from_complex(z: Complex64) -> Option<Self> {
        Some(z)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }

    fn as_rational(&self) -> Option<&BigRational> {
        None
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.norm()
            .total_cmp(&other.norm())
            .then_with(|| self.arg().total_cmp(&other.arg()))
            .then_with(|| self.re.total_cmp(&other.re))
            .then_with(|| self.im.total_cmp(&other.im))
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn render(&self) -> String {
        if self.im == 0.0 {
            format!("{}", self.re)
        } else if self.re == 0.0 {
            format!("{}i", self.im)
        } else if self.im < 0.0 {
            format!("({}-{}i)", self.re, -self.im)
        } else {
            format!("({}+{}i)", self.re, self.im)
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::json!([self.re, self.im])
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::Array(parts) if parts.len() == 2 => {
                let re = parts[0].as_f64();
                let im = parts[1].as_f64();
                match (re, im) {
                    (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                    _ => Err(Error::Json(format!("expected [re, im] numbers, found {v}"))),
                }
            }
            serde_json::Value::Number(n) => Ok(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
            other => Err(Error::Json(format!("expected float scalar [re, im], found {other}"))),
        }
    }
}

/// Parses `p`, `p/q` or a plain decimal `d.ddd` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Json(format!("malformed rational `{text}`"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let digits_only = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((num, den)) = body.split_once('/') {
        if !digits_only(num) || !digits_only(den) {
            return Err(bad());
        }
        let den: BigInt = den.parse().map_err(|_| bad())?;
        if Zero::is_zero(&den) {
            return Err(Error::Json(format!("zero denominator in `{text}`")));
        }
        BigRational::new(num.parse().map_err(|_| bad())?, den)
    } else if let Some((int, frac)) = body.split_once('.') {
        if !digits_only(int) || !digits_only(frac) {
            return Err(bad());
        }
        decimal_to_rational(int, frac)
    } else {
        if !digits_only(body) {
            return Err(bad());
        }
        BigRational::from_integer(body.parse().map_err(|_| bad())?)
    };
    Ok(if neg { -value } else { value })
}

/// `int.frac` as an exact rational; both parts must be ASCII digits.
pub fn decimal_to_rational(int: &str, frac: &str) -> BigRational {
    let joined = format!("{int}{frac}");
    let numer: BigInt = joined.parse().unwrap_or_default();
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    BigRational::new(numer, denom)
}

/// Shorthand for building exact rationals in code and tests.
pub fn q(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_is_always_reduced() {
        let a = q(6, -4);
        assert_eq!(a.numer(), &BigInt::from(-3));
        assert_eq!(a.denom(), &BigInt::from(2));
        let s = q(1, 6) + q(1, 3);
        assert_eq!(s, q(1, 2));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("-3/6").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("17").unwrap(), q(17, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn json_encodings() {
        assert_eq!(q(87, 2).to_json(), serde_json::json!("87/2"));
        assert_eq!(q(5, 1).to_json(), serde_json::json!("5/1"));
        let back = BigRational::from_json(&serde_json::json!("-16/3")).unwrap();
        assert_eq!(back, q(-16, 3));
        let c = Complex64::new(1.5, -2.0);
        assert_eq!(Complex64::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn float_total_order_is_magnitude_then_phase() {
        let a = Complex64::new(0.0, 1.0);
        let b = Complex64::new(0.0, -1.0);
        let c = Complex64::new(2.0, 0.0);
        assert_eq!(a.total_cmp(&c), Ordering::Less);
        assert_eq!(b.total_cmp(&a), Ordering::Less);
    }

    #[test]
    fn powu_matches_repeated_product() {
        assert_eq!(q(2, 3).powu(5), q(32, 243));
        assert_eq!(q(-1, 1).powu(0), q(1, 1));
    }
}
