//! Scalar backends.
//!
//! Every algebraic object in this crate is generic over a real type `T`
//! implementing [`Real`]; coefficients are `Complex<T>`. Two families are
//! provided: IEEE floats (`f32`, `f64`), where zero tests use a tolerance,
//! and [`BigRational`], where arithmetic is exact and zero tests are exact.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Complex coefficient over the real backend `T`.
pub type Coeff<T> = Complex<T>;

/// Real scalar backing a coefficient field.
pub trait Real:
    Num + Signed + Clone + Debug + PartialOrd + Send + Sync + 'static
{
    /// Whether arithmetic is exact (zero tests ignore tolerances).
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Nearest representable value; exact backends store the binary value of `x`.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn from_i64(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }
}

impl Real for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Real for f32 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Real for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).unwrap_or_else(BigRational::zero)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}


pub fn i_unit<T: Real>() -> Coeff<T> {
    Complex::new(T::zero(), T::one())
}

pub fn real<T: Real>(x: T) -> Coeff<T> {
    Complex::new(x, T::zero())
}

pub fn ratio<T: Real>(num: i64, den: i64) -> Coeff<T> {
    real(T::from_ratio(num, den))
}

pub fn to_c64<T: Real>(c: &Coeff<T>) -> Complex64 {
    Complex64::new(c.re.to_f64(), c.im.to_f64())
}

pub fn modulus<T: Real>(c: &Coeff<T>) -> f64 {
    c.re.to_f64().hypot(c.im.to_f64())
}

/// Zero test: exact on exact backends, `|c| <= tol` otherwise.
pub fn is_negligible<T: Real>(c: &Coeff<T>, tol: f64) -> bool {
    if T::EXACT {
        c.is_zero()
    } else {
        modulus(c) <= tol
    }
}

pub fn approx_eq<T: Real>(a: &Coeff<T>, b: &Coeff<T>, tol: f64) -> bool {
    if T::EXACT {
        a == b
    } else {
        is_negligible(&(a.clone() - b.clone()), tol)
    }
}

/// Comparison tolerances. Ignored by exact backends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Coefficient comparison tolerance.
    pub cmp: f64,
    /// Divisors with modulus below this are treated as resonances.
    pub res: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { cmp: 1e-10, res: 1e-10 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_zero_test_ignores_tolerance() {
        let tiny: Coeff<BigRational> = ratio(1, 1_000_000_000_000);
        assert!(!is_negligible(&tiny, 1.0));
        let tiny: Coeff<f64> = ratio(1, 1_000_000_000_000);
        assert!(is_negligible(&tiny, 1e-10));
    }

    #[test]
    fn rational_from_f64_is_binary_exact() {
        let x = <BigRational as Real>::from_f64(0.5);
        assert_eq!(x, BigRational::from_ratio(1, 2));
        assert_eq!(Real::to_f64(&BigRational::from_ratio(3, 4)), 0.75);
    }
}
