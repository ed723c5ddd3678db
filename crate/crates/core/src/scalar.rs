//! Scalar abstractions.
//!
//! Probabilities flow through two kinds of code: recurrences that only need
//! field arithmetic (the backward-induction solver, the absorbing-chain
//! oracle) and closed forms that need transcendental operations (powers of
//! real numbers, the hypergeometric series). The first kind is written
//! against [`Probability`], which `f32`, `f64` and [`BigRational`] all
//! implement; the second against [`FloatScalar`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, One, ToPrimitive, Zero};

/// Field-like scalar used for probabilities.
pub trait Probability:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    /// Converts an exact dice probability into this scalar.
    fn from_ratio(r: &Ratio<i64>) -> Self;

    /// Converts a (configuration) float into this scalar.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Probability for f64 {
    fn from_ratio(r: &Ratio<i64>) -> Self {
        *r.numer() as f64 / *r.denom() as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Probability for f32 {
    fn from_ratio(r: &Ratio<i64>) -> Self {
        (*r.numer() as f64 / *r.denom() as f64) as f32
    }

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Probability for BigRational {
    fn from_ratio(r: &Ratio<i64>) -> Self {
        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite configuration value")
    }

    fn to_f64(&self) -> f64 {
        // Ratio::to_f64 handles numerators and denominators beyond f64 range.
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Floating-point scalar for the closed-form expressions: f32 or f64.
pub trait FloatScalar: Probability + Float + FromPrimitive {
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable literal")
    }
}

impl FloatScalar for f32 {}
impl FloatScalar for f64 {}
