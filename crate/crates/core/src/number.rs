//! Scalar abstraction shared by the float and exact code paths.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational complex number.
pub type ExactComplex = Complex<BigRational>;

/// Ring operations needed to evaluate graph sums over edge weights.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_i64(n: i64) -> Self;
    /// `self / d` for a positive integer `d`.
    fn div_u64(&self, d: u64) -> Self;
    /// Modulus as a float, for diagnostics and bounds.
    fn modulus(&self) -> f64;
    fn to_complex64(&self) -> Complex64;
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn div_u64(&self, d: u64) -> Self {
        self / d as f64
    }
    fn modulus(&self) -> f64 {
        self.abs()
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn div_u64(&self, d: u64) -> Self {
        self / d as f64
    }
    fn modulus(&self) -> f64 {
        self.norm()
    }
    fn to_complex64(&self) -> Complex64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn div_u64(&self, d: u64) -> Self {
        self / BigRational::from_integer(BigInt::from(d))
    }
    fn modulus(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN).abs()
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
}

impl Scalar for ExactComplex {
    fn from_i64(n: i64) -> Self {
        Complex::new(BigRational::from_i64(n), BigRational::zero())
    }
    fn div_u64(&self, d: u64) -> Self {
        Complex::new(self.re.div_u64(d), self.im.div_u64(d))
    }
    fn modulus(&self) -> f64 {
        self.to_complex64().norm()
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Real or complex number that serializes as a plain JSON number when its
/// imaginary part vanishes and as `[re, im]` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Number(pub Complex64);

impl Number {
    pub fn real(x: f64) -> Self {
        Number(Complex64::new(x, 0.0))
    }
    pub fn re(&self) -> f64 {
        self.0.re
    }
    pub fn im(&self) -> f64 {
        self.0.im
    }
    pub fn is_real(&self) -> bool {
        self.0.im == 0.0
    }
}

impl From<Complex64> for Number {
    fn from(z: Complex64) -> Self {
        Number(z)
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::real(x)
    }
}

impl std::fmt::Display for Number {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_real() {
            write!(f, "{}", self.0.re)
        } else {
            write!(f, "{}{:+}i", self.0.re, self.0.im)
        }
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_real() {
            s.serialize_f64(self.0.re)
        } else {
            [self.0.re, self.0.im].serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Real(x) => Number::real(x),
            Repr::Pair([re, im]) => Number(Complex64::new(re, im)),
        })
    }
}

/// `n!` as a float.
pub(crate) fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Binomial coefficient as a `u64` (inputs are small in every use).
pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_serializes_real_as_plain() {
        assert_eq!(serde_json::to_string(&Number::real(0.5)).unwrap(), "0.5");
        let z = Number(Complex64::new(1.0, -2.0));
        assert_eq!(serde_json::to_string(&z).unwrap(), "[1.0,-2.0]");
        let back: Number = serde_json::from_str("[1.0,-2.0]").unwrap();
        assert_eq!(back, z);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(9, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(12, 6), 924);
    }
}
