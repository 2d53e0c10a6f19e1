//! Scalars that stay exact (rational) as long as every operand is rational and
//! no intermediate overflows `i128`; anything else degrades to `Complex<f64>`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = Ratio<i128>;

#[derive(Clone, Copy, Debug)]
pub enum Scalar {
    Rational(Rational),
    Complex(Complex64),
}

impl Scalar {
    pub const ZERO: Scalar = Scalar::Rational(Ratio::new_raw(0, 1));
    pub const ONE: Scalar = Scalar::Rational(Ratio::new_raw(1, 1));

    pub fn int(n: i128) -> Self {
        Scalar::Rational(Rational::from_integer(n))
    }

    /// `num / den`; panics on a zero denominator.
    pub fn ratio(num: i128, den: i128) -> Self {
        Scalar::Rational(Rational::new(num, den))
    }

    pub fn real(x: f64) -> Self {
        Scalar::Complex(Complex64::new(x, 0.0))
    }

    pub fn complex(re: f64, im: f64) -> Self {
        Scalar::Complex(Complex64::new(re, im))
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Scalar::Complex(Complex64::from_polar(r, theta))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Rational(_))
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Scalar::Rational(r) => Some(*r),
            Scalar::Complex(_) => None,
        }
    }

    pub fn to_c64(self) -> Complex64 {
        match self {
            Scalar::Rational(r) => Complex64::new(rat_to_f64(&r), 0.0),
            Scalar::Complex(c) => c,
        }
    }

    pub fn re(&self) -> f64 {
        self.to_c64().re
    }

    pub fn im(&self) -> f64 {
        self.to_c64().im
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Complex(c) => c.re == 0.0 && c.im == 0.0,
        }
    }

    /// True when the value is real (exactly) and strictly positive.
    pub fn is_positive_real(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_positive(),
            Scalar::Complex(c) => c.im == 0.0 && c.re > 0.0,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Scalar::Rational(_) => true,
            Scalar::Complex(c) => c.im == 0.0,
        }
    }

    pub fn conj(self) -> Self {
        match self {
            Scalar::Rational(_) => self,
            Scalar::Complex(c) => Scalar::Complex(c.conj()),
        }
    }

    /// Modulus; exact for rationals.
    pub fn abs(self) -> Self {
        match self {
            Scalar::Rational(r) => Scalar::Rational(r.abs()),
            Scalar::Complex(c) => Scalar::real(c.norm()),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            Scalar::Rational(r) => rat_to_f64(&r.abs()),
            Scalar::Complex(c) => c.norm(),
        }
    }

    /// `ln |self|`, `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        match self {
            Scalar::Rational(r) => {
                if r.is_zero() {
                    f64::NEG_INFINITY
                } else {
                    // numerator and denominator separately keep tiny/huge ratios finite
                    (r.numer().unsigned_abs() as f64).ln() - (r.denom().unsigned_abs() as f64).ln()
                }
            }
            Scalar::Complex(c) => c.norm().ln(),
        }
    }

    /// `self / |self|`, or 1 for zero.
    pub fn phase(self) -> Self {
        if self.is_zero() {
            return Scalar::ONE;
        }
        match self {
            Scalar::Rational(r) => Scalar::int(if r.is_negative() { -1 } else { 1 }),
            Scalar::Complex(c) => Scalar::Complex(c / c.norm()),
        }
    }

    pub fn recip(self) -> Self {
        Scalar::ONE / self
    }

    pub fn powi(self, k: u64) -> Self {
        let mut base = self;
        let mut acc = Scalar::ONE;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }

    /// Exact comparison of moduli when both are rational, float otherwise.
    pub fn cmp_abs(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.abs().cmp(&b.abs()),
            _ => self.norm().partial_cmp(&other.norm()).unwrap_or(Ordering::Equal),
        }
    }

    pub fn approx_eq(&self, other: &Scalar, tol: f64) -> bool {
        (self.to_c64() - other.to_c64()).norm() <= tol
    }
}

fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a == b,
            _ => self.to_c64() == other.to_c64(),
        }
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::ZERO
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n as i128)
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::real(x)
    }
}

impl From<Complex64> for Scalar {
    fn from(c: Complex64) -> Self {
        Scalar::Complex(c)
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::Rational(r)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                if let (Scalar::Rational(a), Scalar::Rational(b)) = (&self, &rhs) {
                    if let Some(r) = a.$checked(b) {
                        return Scalar::Rational(r);
                    }
                }
                Scalar::Complex(self.to_c64().$method(rhs.to_c64()))
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        if let (Scalar::Rational(a), Scalar::Rational(b)) = (&self, &rhs) {
            if !b.is_zero() {
                if let Some(r) = a.checked_div(b) {
                    return Scalar::Rational(r);
                }
            }
        }
        Scalar::Complex(self.to_c64() / rhs.to_c64())
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Complex(c) => Scalar::Complex(-c),
        }
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Self {
        iter.fold(Scalar::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{r}"),
            Scalar::Complex(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Scalar::Complex(c) => write!(f, "{}{:+}i", c.re, c.im),
        }
    }
}

/// Wire form: integers and `"p/q"` strings are exact, bare floats and
/// `[re, im]` pairs are inexact.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Rational(r) if r.is_integer() && i64::try_from(*r.numer()).is_ok() => {
                s.serialize_i64(*r.numer() as i64)
            }
            Scalar::Rational(r) => s.serialize_str(&r.to_string()),
            Scalar::Complex(c) if c.im == 0.0 => s.serialize_f64(c.re),
            Scalar::Complex(c) => [c.re, c.im].serialize(s),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Int(i64),
    Float(f64),
    Text(String),
    Pair([f64; 2]),
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match ScalarRepr::deserialize(d)? {
            ScalarRepr::Int(n) => Ok(Scalar::int(n as i128)),
            ScalarRepr::Float(x) => Ok(Scalar::real(x)),
            ScalarRepr::Pair([re, im]) => Ok(Scalar::complex(re, im)),
            ScalarRepr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl FromStr for Scalar {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(r) = Rational::from_str(s) {
            return Ok(Scalar::Rational(r));
        }
        s.parse::<f64>()
            .map(Scalar::real)
            .map_err(|_| format!("not a scalar: {s:?}"))
    }
}
