//! Numeric backends for the oracle engine.
//!
//! Exact enumeration runs over [`BigRational`] when every constant and
//! probability in the model is rational, which reproduces worked fractions
//! like 10/99 literally. Models that use transcendental operations (`exp`,
//! `logit`, ...) fall back to an `f64` backend with the same enumeration
//! structure; Monte-Carlo evaluation always runs on `f64`.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

/// Arithmetic required by the shared mechanism evaluator and enumeration
/// engine. Implemented for `f64` and `BigRational`.
pub trait Scalar: Clone + PartialOrd + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(q: &BigRational) -> Self;
    fn to_f64(&self) -> f64;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn powi(&self, k: i32) -> Result<Self>;

    /// Transcendental ops; rational arithmetic rejects them.
    fn exp(&self) -> Result<Self>;
    fn ln(&self) -> Result<Self>;
    fn expit(&self) -> Result<Self>;
    fn logit(&self) -> Result<Self>;

    fn is_zero(&self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(q: &BigRational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            return Err(Error::Eval("division by zero".into()));
        }
        Ok(self / rhs)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, k: i32) -> Result<Self> {
        Ok(f64::powi(*self, k))
    }
    fn exp(&self) -> Result<Self> {
        Ok(f64::exp(*self))
    }
    fn ln(&self) -> Result<Self> {
        if *self <= 0.0 {
            return Err(Error::Eval(format!("log of non-positive value {self}")));
        }
        Ok(f64::ln(*self))
    }
    fn expit(&self) -> Result<Self> {
        Ok(1.0 / (1.0 + f64::exp(-*self)))
    }
    fn logit(&self) -> Result<Self> {
        if *self <= 0.0 || *self >= 1.0 {
            return Err(Error::Eval(format!("logit of {self} outside (0,1)")));
        }
        Ok((self / (1.0 - self)).ln())
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        if Zero::is_zero(rhs) {
            return Err(Error::Eval("division by zero".into()));
        }
        Ok(self / rhs)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, k: i32) -> Result<Self> {
        if k >= 0 {
            Ok(num::pow::pow(self.clone(), k as usize))
        } else {
            if Zero::is_zero(self) {
                return Err(Error::Eval("0 raised to negative power".into()));
            }
            Ok(<BigRational as One>::one() / num::pow::pow(self.clone(), (-k) as usize))
        }
    }
    fn exp(&self) -> Result<Self> {
        Err(Error::Eval("exp is not exact in rational arithmetic".into()))
    }
    fn ln(&self) -> Result<Self> {
        Err(Error::Eval("log is not exact in rational arithmetic".into()))
    }
    fn expit(&self) -> Result<Self> {
        Err(Error::Eval("expit is not exact in rational arithmetic".into()))
    }
    fn logit(&self) -> Result<Self> {
        Err(Error::Eval("logit is not exact in rational arithmetic".into()))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Parses a decimal or fractional literal into an exact rational.
///
/// Accepts `3`, `-0.25`, `1/3`, `1e-3`-free decimals. Returns `None` for
/// anything else.
pub fn rational_from_str(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let int_part = if int_part.is_empty() { "0" } else { int_part };
    let int: BigInt = int_part.parse().ok()?;
    let mut value = BigRational::from_integer(int);
    if !frac_part.is_empty() {
        let digits: BigInt = frac_part.parse().ok()?;
        if digits.is_negative() {
            return None;
        }
        let scale = num::pow::pow(BigInt::from(10), frac_part.len());
        value += BigRational::new(digits, scale);
    }
    Some(if sign < 0 { -value } else { value })
}


/// SplitMix64 step, used to derive independent sub-seeds from a base seed
/// and a tag without correlation between adjacent tags.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
