//! Sparse truncated Fourier-Taylor series
//! `f(X, Y) = sum f_{P,Q} e^{i<P,X>} Y^Q` with `|Q| <= cap`.
//!
//! Terms are kept in canonical sparse form: no stored coefficient is exactly
//! zero, so two series over an exact backend are equal iff they are
//! structurally equal. Terms with `|Q|` above the cap are unknown and are
//! never stored.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::scalar::{approx_eq, modulus, real, Coeff, Real};

/// Weights of the analytic norm: strip width `r` in X, polydisk radius `delta` in Y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormParams {
    pub r: f64,
    pub delta: f64,
}

impl NormParams {
    pub fn new(r: f64, delta: f64) -> Result<Self> {
        if !(r > 0.0 && delta > 0.0) {
            return Err(Error::Invalid(format!(
                "norm parameters must be positive, got r = {r}, delta = {delta}"
            )));
        }
        Ok(NormParams { r, delta })
    }
}

/// Differentiation variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series<T: Real> {
    d: usize,
    n: usize,
    cap: u32,
    terms: BTreeMap<MultiIndex, Coeff<T>>,
}

impl<T: Real> Series<T> {
    pub fn zero(d: usize, n: usize, cap: u32) -> Self {
        Series {
            d,
            n,
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, n: usize, cap: u32, c: Coeff<T>) -> Self {
        Self::monomial(d, n, cap, MultiIndex::zero(d, n), c)
    }

    pub fn one(d: usize, n: usize, cap: u32) -> Self {
        Self::constant(d, n, cap, Complex::one())
    }

    /// `c e^{i<P,X>} Y^Q`, or zero when `|Q| > cap`.
    pub fn monomial(d: usize, n: usize, cap: u32, idx: MultiIndex, c: Coeff<T>) -> Self {
        assert_eq!(idx.dims(), (d, n), "index dimensions");
        let mut s = Self::zero(d, n, cap);
        s.add_term(idx, c);
        s
    }

    /// Sums the given terms, dropping anything above the cap.
    pub fn from_terms<I>(d: usize, n: usize, cap: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, Coeff<T>)>,
    {
        let mut s = Self::zero(d, n, cap);
        for (idx, c) in terms {
            assert_eq!(idx.dims(), (d, n), "index dimensions");
            s.add_term(idx, c);
        }
        s
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d, self.n)
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Coeff<T>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> Coeff<T> {
        self.terms.get(idx).cloned().unwrap_or_else(Complex::zero)
    }

    /// Coefficient of `Y^Q` with `P = 0`... and any `P`: convenience lookup.
    pub fn coeff_at(&self, p: &[i32], q: &[u32]) -> Coeff<T> {
        self.coeff(&MultiIndex::new(p, q))
    }

    /// Constant term `f_{0,0}`.
    pub fn constant_term(&self) -> Coeff<T> {
        self.coeff(&MultiIndex::zero(self.d, self.n))
    }

    pub(crate) fn add_term(&mut self, idx: MultiIndex, c: Coeff<T>) {
        if idx.q_norm() > self.cap || c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(idx) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    /// Relabels the cap. Lowering truncates; raising asserts that the caller
    /// knows the missing degrees vanish.
    pub(crate) fn with_cap(mut self, cap: u32) -> Self {
        if cap < self.cap {
            self.terms.retain(|idx, _| idx.q_norm() <= cap);
        }
        self.cap = cap;
        self
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    /// Sum; the result is known up to the smaller of the two caps.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        Ok(self + other)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        Ok(self - other)
    }

    /// Cauchy product truncated at the common cap.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        if self.cap != other.cap {
            return Err(Error::CapMismatch(self.cap, other.cap));
        }
        Ok(self.mul_trunc(other, self.cap))
    }

    pub fn scale(&self, s: &Coeff<T>) -> Self {
        if s.is_zero() {
            return Self::zero(self.d, self.n, self.cap);
        }
        let mut out = Self::zero(self.d, self.n, self.cap);
        for (idx, c) in &self.terms {
            let v = c.clone() * s.clone();
            if !v.is_zero() {
                out.terms.insert(idx.clone(), v);
            }
        }
        out
    }

    /// Product of the stored terms, keeping `|Q| <= cap`.
    ///
    /// The result is the true truncated product whenever every missing term
    /// of either factor lies above `cap` once multiplied by the other.
    pub fn mul_trunc(&self, other: &Self, cap: u32) -> Self {
        assert_eq!(self.dims(), other.dims(), "series dimensions");
        let mut acc: HashMap<MultiIndex, Coeff<T>> = HashMap::new();
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (ia, ca) in &small.terms {
            if ia.q_norm() > cap {
                break;
            }
            let room = cap - ia.q_norm();
            for (ib, cb) in &large.terms {
                if ib.q_norm() > room {
                    break;
                }
                let v = ca.clone() * cb.clone();
                acc.entry(ia.add(ib))
                    .and_modify(|e| *e = e.clone() + v.clone())
                    .or_insert(v);
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Series {
            d: self.d,
            n: self.n,
            cap,
            terms,
        }
    }

    /// `T^k f`: keeps exactly the terms with `|Q| <= k`.
    pub fn truncate(&self, k: u32) -> Result<Self> {
        if k > self.cap {
            return Err(Error::OrderOutOfRange {
                order: k,
                cap: self.cap,
            });
        }
        Ok(self.clone().with_cap(k))
    }

    /// Terms with `|Q| = k` exactly.
    pub fn homogeneous_part(&self, k: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(idx, _)| idx.q_norm() == k)
            .map(|(i, c)| (i.clone(), c.clone()))
            .collect();
        Series {
            d: self.d,
            n: self.n,
            cap: self.cap,
            terms,
        }
    }

    /// Largest `k` with `f_{P,Q} = 0` whenever `|Q| < k`; `cap + 1` for zero.
    pub fn order(&self) -> u32 {
        self.terms
            .keys()
            .next()
            .map(|idx| idx.q_norm())
            .unwrap_or(self.cap + 1)
    }

    pub fn derivative(&self, var: Var) -> Self {
        let mut out = Self::zero(self.d, self.n, self.cap);
        match var {
            Var::X(j) => {
                assert!(j < self.d, "X-variable index {j} out of range");
                for (idx, c) in &self.terms {
                    let pj = idx.p()[j];
                    if pj != 0 {
                        let factor = Complex::new(T::zero(), T::from_i64(pj as i64));
                        out.terms.insert(idx.clone(), c.clone() * factor);
                    }
                }
            }
            Var::Y(j) => {
                assert!(j < self.n, "Y-variable index {j} out of range");
                for (idx, c) in &self.terms {
                    if let Some(lower) = idx.lower_y(j) {
                        let factor = real(T::from_i64(idx.q()[j] as i64));
                        out.terms.insert(lower, c.clone() * factor);
                    }
                }
            }
        }
        out
    }

    /// `sum |f_{P,Q}| e^{r|P|} delta^{|Q|}`.
    pub fn weighted_norm(&self, p: &NormParams) -> f64 {
        self.terms
            .iter()
            .map(|(idx, c)| {
                modulus(c) * (p.r * idx.p_norm() as f64).exp() * p.delta.powi(idx.q_norm() as i32)
            })
            .fold(0.0, |acc, x| acc + x)
    }

    /// Inverse of a series whose order-0 part is exactly 1, by the
    /// terminating Neumann series `sum (1 - f)^j`.
    pub fn invert_unit(&self) -> Result<Self> {
        let one = Self::one(self.d, self.n, self.cap);
        let h = &one - self;
        if h.order() == 0 {
            return Err(Error::NotUnit);
        }
        let mut acc = one.clone();
        let mut power = one;
        loop {
            power = power.mul_trunc(&h, self.cap);
            if power.is_zero() {
                break;
            }
            acc += &power;
        }
        Ok(acc)
    }

    /// Point evaluation in double precision.
    pub fn eval(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        assert_eq!((x.len(), y.len()), self.dims(), "evaluation point dimensions");
        let i = Complex64::i();
        self.terms
            .iter()
            .map(|(idx, c)| {
                let phase: Complex64 = idx
                    .p()
                    .iter()
                    .zip(x)
                    .map(|(&pj, &xj)| i * xj * pj as f64)
                    .sum::<Complex64>()
                    .exp();
                let mono: Complex64 = idx
                    .q()
                    .iter()
                    .zip(y)
                    .map(|(&qj, &yj)| yj.powu(qj))
                    .product();
                crate::scalar::to_c64(c) * phase * mono
            })
            .sum()
    }

    /// Keeps the terms accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&MultiIndex, &Coeff<T>) -> bool) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(i, c)| keep(i, c))
            .map(|(i, c)| (i.clone(), c.clone()))
            .collect();
        Series {
            d: self.d,
            n: self.n,
            cap: self.cap,
            terms,
        }
    }

    /// Applies `f` to each coefficient, dropping results that vanish.
    pub fn map_terms(&self, mut f: impl FnMut(&MultiIndex, &Coeff<T>) -> Coeff<T>) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(i, c)| (i.clone(), f(i, c)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Series {
            d: self.d,
            n: self.n,
            cap: self.cap,
            terms,
        }
    }

    /// Coefficientwise comparison with tolerance (exact equality on exact backends).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.dims() != other.dims() {
            return false;
        }
        let zero = Complex::zero();
        let keys: std::collections::BTreeSet<&MultiIndex> =
            self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter().all(|k| {
            let a = self.terms.get(k).unwrap_or(&zero);
            let b = other.terms.get(k).unwrap_or(&zero);
            approx_eq(a, b, tol)
        })
    }

    /// Converts coefficients to another backend.
    pub fn convert<U: Real>(&self, f: impl Fn(&T) -> U) -> Series<U> {
        Series {
            d: self.d,
            n: self.n,
            cap: self.cap,
            terms: self
                .terms
                .iter()
                .map(|(i, c)| (i.clone(), Complex::new(f(&c.re), f(&c.im))))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }
}

impl<T: Real> AddAssign<&Series<T>> for Series<T> {
    fn add_assign(&mut self, rhs: &Series<T>) {
        assert_eq!(self.dims(), rhs.dims(), "series dimensions");
        if rhs.cap < self.cap {
            let cap = rhs.cap;
            self.terms.retain(|idx, _| idx.q_norm() <= cap);
            self.cap = cap;
        }
        for (idx, c) in &rhs.terms {
            self.add_term(idx.clone(), c.clone());
        }
    }
}

impl<T: Real> SubAssign<&Series<T>> for Series<T> {
    fn sub_assign(&mut self, rhs: &Series<T>) {
        assert_eq!(self.dims(), rhs.dims(), "series dimensions");
        if rhs.cap < self.cap {
            let cap = rhs.cap;
            self.terms.retain(|idx, _| idx.q_norm() <= cap);
            self.cap = cap;
        }
        for (idx, c) in &rhs.terms {
            self.add_term(idx.clone(), -c.clone());
        }
    }
}

impl<T: Real> Add for &Series<T> {
    type Output = Series<T>;
    fn add(self, rhs: &Series<T>) -> Series<T> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<T: Real> Sub for &Series<T> {
    type Output = Series<T>;
    fn sub(self, rhs: &Series<T>) -> Series<T> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<T: Real> Neg for &Series<T> {
    type Output = Series<T>;
    fn neg(self) -> Series<T> {
        self.map_terms(|_, c| -c.clone())
    }
}

/// Cauchy product at the smaller cap.
impl<T: Real> Mul for &Series<T> {
    type Output = Series<T>;
    fn mul(self, rhs: &Series<T>) -> Series<T> {
        self.mul_trunc(rhs, self.cap.min(rhs.cap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    type S = Series<BigRational>;

    fn mono(p: i32, q: &[u32], c: Coeff<BigRational>, cap: u32) -> S {
        S::monomial(1, q.len(), cap, MultiIndex::new(&[p], q), c)
    }

    fn c(n: i64) -> Coeff<BigRational> {
        ratio(n, 1)
    }

    #[test]
    fn monomial_square() {
        let y = mono(0, &[1], c(1), 3);
        let y2 = y.checked_mul(&y).unwrap();
        assert_eq!(y2, mono(0, &[2], c(1), 3));
    }

    #[test]
    fn additive_inverse_is_empty() {
        let f = mono(1, &[1], c(1), 2);
        let g = f.scale(&c(-1));
        assert!(f.checked_add(&g).unwrap().is_empty());
    }

    #[test]
    fn difference_of_squares_truncated() {
        let one = S::one(1, 1, 2);
        let e = mono(1, &[1], c(1), 2);
        let prod = (&one + &e).checked_mul(&(&one - &e)).unwrap();
        assert_eq!(prod, &one - &mono(2, &[2], c(1), 2));
    }

    #[test]
    fn mismatches_are_errors() {
        let a = S::one(1, 1, 2);
        let b = S::one(1, 2, 2);
        assert!(matches!(a.checked_add(&b), Err(Error::DimensionMismatch { .. })));
        let b = S::one(1, 1, 3);
        assert_eq!(a.checked_mul(&b), Err(Error::CapMismatch(2, 3)));
    }

    #[test]
    fn truncation() {
        let f = &mono(0, &[1], c(1), 3) + &mono(0, &[2], c(1), 3);
        assert_eq!(f.truncate(1).unwrap(), mono(0, &[1], c(1), 1));
        let g = &mono(3, &[0], c(1), 3) + &mono(0, &[1], c(1), 3);
        assert_eq!(g.truncate(0).unwrap(), mono(3, &[0], c(1), 0));
        assert!(S::zero(1, 1, 3).truncate(2).unwrap().is_zero());
        assert!(f.truncate(4).is_err());
    }

    #[test]
    fn orders() {
        let f = S::from_terms(
            1,
            2,
            4,
            [
                (MultiIndex::new(&[0], &[2, 1]), c(1)),
                (MultiIndex::new(&[1], &[3, 0]), c(1)),
            ],
        );
        assert_eq!(f.order(), 3);
        assert_eq!(mono(5, &[0], c(1), 4).order(), 0);
        assert_eq!(S::zero(1, 1, 4).order(), 5);
    }

    #[test]
    fn derivatives() {
        let f = mono(2, &[1], c(1), 3);
        let i2 = Complex::new(BigRational::from_ratio(0, 1), BigRational::from_ratio(2, 1));
        assert_eq!(f.derivative(Var::X(0)), mono(2, &[1], i2, 3));
        assert_eq!(mono(0, &[2], c(1), 3).derivative(Var::Y(0)), mono(0, &[1], c(2), 3));
        assert!(mono(1, &[0], c(1), 3).derivative(Var::Y(0)).is_zero());
    }

    #[test]
    fn weighted_norm_examples() {
        let p = NormParams::new(1.0, 0.5).unwrap();
        let f = mono(1, &[1], c(2), 2);
        assert!((f.weighted_norm(&p) - std::f64::consts::E).abs() < 1e-14);
        assert_eq!(S::zero(1, 1, 2).weighted_norm(&p), 0.0);

        // 3 Y1 Y2 + (1+i) e^{-2iX}, r = 0.5, delta = 0.25
        let f = S::from_terms(
            1,
            2,
            2,
            [
                (MultiIndex::new(&[0], &[1, 1]), c(3)),
                (
                    MultiIndex::new(&[-2], &[0, 0]),
                    Complex::new(BigRational::from_ratio(1, 1), BigRational::from_ratio(1, 1)),
                ),
            ],
        );
        let p = NormParams::new(0.5, 0.25).unwrap();
        let oracle = 3.0 * 0.0625 + 2f64.sqrt() * 1f64.exp();
        assert!((f.weighted_norm(&p) - oracle).abs() < 1e-12);
        assert!((oracle - 4.03173).abs() < 5e-6);
    }

    #[test]
    fn unit_inverses() {
        let one = S::one(1, 2, 4);
        assert_eq!(one.invert_unit().unwrap(), one);

        let f = &S::one(1, 1, 2) + &mono(0, &[1], c(1), 2);
        let expect = &(&S::one(1, 1, 2) - &mono(0, &[1], c(1), 2)) + &mono(0, &[2], c(1), 2);
        assert_eq!(f.invert_unit().unwrap(), expect);

        let y1y2 = mono(0, &[1, 1], ratio(1, 2), 4);
        let f = &one + &y1y2;
        let g = f.invert_unit().unwrap();
        let expect = S::from_terms(
            1,
            2,
            4,
            [
                (MultiIndex::new(&[0], &[0, 0]), c(1)),
                (MultiIndex::new(&[0], &[1, 1]), ratio(-1, 2)),
                (MultiIndex::new(&[0], &[2, 2]), ratio(1, 4)),
            ],
        );
        assert_eq!(g, expect);
        assert_eq!(f.checked_mul(&g).unwrap(), one);
    }

    #[test]
    fn non_unit_is_rejected() {
        let f = S::constant(1, 1, 2, c(2));
        assert_eq!(f.invert_unit(), Err(Error::NotUnit));
        let f = &S::one(1, 1, 2) + &mono(1, &[0], c(1), 2);
        assert_eq!(f.invert_unit(), Err(Error::NotUnit));
    }

    #[test]
    fn evaluation_of_monomial() {
        let f = mono(1, &[2], c(3), 2);
        let v = f.eval(&[Complex64::new(0.0, 0.0)], &[Complex64::new(0.5, 0.0)]);
        assert!((v - Complex64::new(0.75, 0.0)).norm() < 1e-15);
    }
}
