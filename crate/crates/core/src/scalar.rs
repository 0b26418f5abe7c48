//! Number types the geometric kernels run on: `f64` with relative
//! tolerances, or exact big rationals.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    /// Absolute tolerance used for sign decisions at the given magnitude.
    fn tol(scale: &Self) -> Self;

    /// Scaling of a half-space normal used by the interior margin
    /// (Euclidean norm for floats, L1 norm when exact).
    fn norm_weight(normal: &[Self]) -> Self;

    fn is_zero_at(&self, scale: &Self) -> bool {
        self.abs() <= Self::tol(scale)
    }

    fn max_abs(values: &[Self]) -> Self {
        values
            .iter()
            .map(|v| v.abs())
            .fold(Self::zero(), |a, b| if b > a { b } else { a })
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn tol(scale: &Self) -> Self {
        1e-12 * f64::abs(*scale).max(1.0)
    }
    fn norm_weight(normal: &[Self]) -> Self {
        normal.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn tol(_scale: &Self) -> Self {
        Zero::zero()
    }
    fn norm_weight(normal: &[Self]) -> Self {
        normal
            .iter()
            .fold(<Self as Zero>::zero(), |acc, v| acc + Signed::abs(v))
    }
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_roundtrip_is_exact() {
        let r = <BigRational as Scalar>::from_f64(0.1);
        assert_eq!(Scalar::to_f64(&r), 0.1);
        assert!(BigRational::tol(&r).is_zero());
    }

    #[test]
    fn weights() {
        assert_eq!(f64::norm_weight(&[3.0, 4.0]), 5.0);
        let n = [<BigRational as Scalar>::from_f64(-3.0), <BigRational as Scalar>::from_f64(4.0)];
        assert_eq!(Scalar::to_f64(&BigRational::norm_weight(&n)), 7.0);
    }
}
