//! Vector fields on `T^d x C^n`, near-identity diffeomorphisms and the
//! operations linking them: Lie derivative, bracket, Taylor composition and
//! the conjugacy defect.
//!
//! A field with cap `K` stores its X-components at cap `K` and its
//! Y-components at cap `K + 1`, so that truncation at quasi-degree `K` is
//! the identity. Y-components never carry a term constant in Y: every field
//! has quasi-order at least 0. Scalar series acting on a field of cap `K`
//! (Lie derivatives, multipliers) have cap `K`.

use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::scalar::{real, Coeff, Real, Tolerances};
use crate::series::{NormParams, Series, Var};

/// Frequencies `omega` and eigenvalues `Lambda` of
/// `S = sum omega_j d/dX_j + sum lambda_j Y_j d/dY_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasilinearData<T: Real> {
    omega: Vec<T>,
    lambda: Vec<Coeff<T>>,
    tol: Tolerances,
}

impl<T: Real> QuasilinearData<T> {
    pub fn new(omega: Vec<T>, lambda: Vec<Coeff<T>>) -> Result<Self> {
        if omega.is_empty() || lambda.is_empty() {
            return Err(Error::Invalid(
                "both the torus dimension d and the disk dimension n must be at least 1".into(),
            ));
        }
        Ok(QuasilinearData {
            omega,
            lambda,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn d(&self) -> usize {
        self.omega.len()
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d(), self.n())
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn lambda(&self) -> &[Coeff<T>] {
        &self.lambda
    }

    pub fn tol(&self) -> Tolerances {
        self.tol
    }

    /// `C_omega = max_j |omega_j|`, which bounds the norm of `S`.
    pub fn c_omega(&self) -> f64 {
        self.omega
            .iter()
            .map(|w| w.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// The quasilinear field `S` at cap `cap`.
    pub fn s_field(&self, cap: u32) -> VectorField<T> {
        let (d, n) = self.dims();
        let mut f = VectorField::zero(d, n, cap);
        for (j, w) in self.omega.iter().enumerate() {
            f.comps[j] = Series::constant(d, n, cap, real(w.clone()));
        }
        for (j, l) in self.lambda.iter().enumerate() {
            let mut q = vec![0; n];
            q[j] = 1;
            f.comps[d + j] =
                Series::monomial(d, n, cap + 1, MultiIndex::new(&vec![0; d], &q), l.clone());
        }
        f
    }

    pub fn convert<U: Real>(&self, f: impl Fn(&T) -> U) -> QuasilinearData<U> {
        QuasilinearData {
            omega: self.omega.iter().map(&f).collect(),
            lambda: self
                .lambda
                .iter()
                .map(|c| Coeff::new(f(&c.re), f(&c.im)))
                .collect(),
            tol: self.tol,
        }
    }
}

/// `sum_L F_L d/dZ_L` with `Z = (X_1..X_d, Y_1..Y_n)`; component `L` is 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T: Real> {
    d: usize,
    n: usize,
    cap: u32,
    comps: Vec<Series<T>>,
}

impl<T: Real> VectorField<T> {
    pub fn zero(d: usize, n: usize, cap: u32) -> Self {
        let comps = (0..d + n)
            .map(|l| Series::zero(d, n, if l < d { cap } else { cap + 1 }))
            .collect();
        VectorField { d, n, cap, comps }
    }

    /// Builds a field from `d + n` components. Components are truncated to
    /// the field's caps; a component known to fewer degrees is an error.
    pub fn from_components(d: usize, n: usize, cap: u32, comps: Vec<Series<T>>) -> Result<Self> {
        if comps.len() != d + n {
            return Err(Error::Invalid(format!(
                "a field on T^{d} x C^{n} needs {} components, got {}",
                d + n,
                comps.len()
            )));
        }
        let mut out = Vec::with_capacity(d + n);
        for (l, c) in comps.into_iter().enumerate() {
            if c.dims() != (d, n) {
                return Err(Error::DimensionMismatch {
                    expected: (d, n),
                    found: c.dims(),
                });
            }
            let want = if l < d { cap } else { cap + 1 };
            if c.cap() < want {
                return Err(Error::CapMismatch(c.cap(), want));
            }
            if l >= d && c.order() == 0 {
                return Err(Error::NegativeQuasiOrder { component: l });
            }
            out.push(c.with_cap(want));
        }
        Ok(VectorField {
            d,
            n,
            cap,
            comps: out,
        })
    }

    /// `c e^{i<P,X>} Y^Q d/dZ_L`.
    pub fn monomial(
        d: usize,
        n: usize,
        cap: u32,
        component: usize,
        idx: MultiIndex,
        c: Coeff<T>,
    ) -> Result<Self> {
        let mut f = Self::zero(d, n, cap);
        if component >= d + n {
            return Err(Error::Invalid(format!("component {component} out of range")));
        }
        if component >= d && idx.q_norm() == 0 {
            return Err(Error::NegativeQuasiOrder { component });
        }
        f.comps[component].add_term(idx, c);
        Ok(f)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d, self.n)
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn components(&self) -> &[Series<T>] {
        &self.comps
    }

    pub fn component(&self, l: usize) -> &Series<T> {
        &self.comps[l]
    }

    pub fn is_y(&self, l: usize) -> bool {
        l >= self.d
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Series::is_zero)
    }

    /// Number of stored terms over all components.
    pub fn num_terms(&self) -> usize {
        self.comps.iter().map(Series::len).sum()
    }

    /// Every `(component, index, coefficient)` in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &MultiIndex, &Coeff<T>)> {
        self.comps
            .iter()
            .enumerate()
            .flat_map(|(l, s)| s.terms().map(move |(i, c)| (l, i, c)))
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        if self.cap != other.cap {
            return Err(Error::CapMismatch(self.cap, other.cap));
        }
        Ok(())
    }

    pub(crate) fn map_components(&self, mut f: impl FnMut(usize, &Series<T>) -> Series<T>) -> Self {
        VectorField {
            d: self.d,
            n: self.n,
            cap: self.cap,
            comps: self.comps.iter().enumerate().map(|(l, c)| f(l, c)).collect(),
        }
    }

    pub fn scale(&self, s: &Coeff<T>) -> Self {
        self.map_components(|_, c| c.scale(s))
    }

    /// `T^k F`: X-components truncated at `k`, Y-components at `k + 1`.
    pub fn truncate(&self, k: u32) -> Result<Self> {
        if k > self.cap {
            return Err(Error::OrderOutOfRange {
                order: k,
                cap: self.cap,
            });
        }
        let mut out = self.map_components(|l, c| c.clone().with_cap(if l < self.d { k } else { k + 1 }));
        out.cap = k;
        Ok(out)
    }

    /// Raises the cap label, valid when the caller knows the extra degrees vanish.
    #[cfg(test)]
    pub(crate) fn with_cap(&self, cap: u32) -> Self {
        let mut out = self.map_components(|l, c| c.clone().with_cap(if l < self.d { cap } else { cap + 1 }));
        out.cap = cap;
        out
    }

    /// Terms of quasi-degree exactly `k` (`|Q| = k` in X-components, `k + 1` in Y-components).
    pub fn quasi_homogeneous_part(&self, k: u32) -> Self {
        self.map_components(|l, c| c.homogeneous_part(if l < self.d { k } else { k + 1 }))
    }

    /// Terms with quasi-degree in `lo..=hi`.
    pub fn quasi_degree_range(&self, lo: u32, hi: u32) -> Self {
        let d = self.d;
        self.map_components(|l, c| {
            let shift = if l < d { 0 } else { 1 };
            c.filter(|idx, _| {
                let q = idx.q_norm() - shift.min(idx.q_norm());
                q >= lo && q <= hi
            })
        })
    }

    /// Quasi-order: the largest `k` such that X-components have order `k`
    /// and Y-components order `k + 1`. `cap + 1` for the zero field.
    pub fn order(&self) -> u32 {
        self.comps
            .iter()
            .enumerate()
            .map(|(l, c)| {
                if l < self.d {
                    c.order()
                } else {
                    c.order() - 1
                }
            })
            .min()
            .unwrap_or(self.cap + 1)
    }

    /// Largest component norm.
    pub fn norm(&self, p: &NormParams) -> f64 {
        self.comps
            .iter()
            .map(|c| c.weighted_norm(p))
            .fold(0.0, f64::max)
    }

    /// The Lie derivative `F(g) = sum F_j dg/dX_j + sum F_{d+j} dg/dY_j`,
    /// exact up to `min(g.cap, K + order(g))`.
    pub fn apply(&self, g: &Series<T>) -> Series<T> {
        assert_eq!(g.dims(), self.dims(), "series and field dimensions");
        let cap = g.cap().min(self.cap + g.order());
        let mut out = Series::zero(self.d, self.n, cap);
        if g.is_zero() {
            return out;
        }
        for (l, f) in self.comps.iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            let var = if l < self.d {
                Var::X(l)
            } else {
                Var::Y(l - self.d)
            };
            let dg = g.derivative(var);
            if dg.is_zero() {
                continue;
            }
            out += &f.mul_trunc(&dg, cap);
        }
        out
    }

    /// `(F(G_L))_L`, the derivative of `G` along `F`, i.e. `DG . F`.
    pub fn apply_to_field(&self, g: &VectorField<T>) -> Result<VectorField<T>> {
        self.check(g)?;
        Ok(g.map_components(|_, c| self.apply(c).with_cap(c.cap())))
    }

    /// `[F, G] = DG . F - DF . G`, so that `[S, W] = divisor * W` on monomial fields.
    pub fn bracket(&self, g: &VectorField<T>) -> Result<VectorField<T>> {
        let a = self.apply_to_field(g)?;
        let b = g.apply_to_field(self)?;
        Ok(&a - &b)
    }

    /// `a F` for a scalar series `a` of cap `K`.
    pub fn mul_series(&self, a: &Series<T>) -> Result<VectorField<T>> {
        if a.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: a.dims(),
            });
        }
        if a.cap() < self.cap {
            return Err(Error::CapMismatch(a.cap(), self.cap));
        }
        Ok(self.map_components(|_, c| a.mul_trunc(c, c.cap())))
    }

    /// Quasi-order of the displacement is at least 1.
    pub fn is_tangent_displacement(&self) -> bool {
        self.order() >= 1
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dims() == other.dims()
            && self
                .comps
                .iter()
                .zip(&other.comps)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    pub fn convert<U: Real>(&self, f: impl Fn(&T) -> U) -> VectorField<U> {
        VectorField {
            d: self.d,
            n: self.n,
            cap: self.cap,
            comps: self.comps.iter().map(|c| c.convert(&f)).collect(),
        }
    }
}

impl<T: Real> AddAssign<&VectorField<T>> for VectorField<T> {
    fn add_assign(&mut self, rhs: &VectorField<T>) {
        assert_eq!(self.dims(), rhs.dims(), "field dimensions");
        self.cap = self.cap.min(rhs.cap);
        for (a, b) in self.comps.iter_mut().zip(&rhs.comps) {
            *a += b;
        }
    }
}

impl<T: Real> SubAssign<&VectorField<T>> for VectorField<T> {
    fn sub_assign(&mut self, rhs: &VectorField<T>) {
        assert_eq!(self.dims(), rhs.dims(), "field dimensions");
        self.cap = self.cap.min(rhs.cap);
        for (a, b) in self.comps.iter_mut().zip(&rhs.comps) {
            *a -= b;
        }
    }
}

impl<T: Real> Add for &VectorField<T> {
    type Output = VectorField<T>;
    fn add(self, rhs: &VectorField<T>) -> VectorField<T> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<T: Real> Sub for &VectorField<T> {
    type Output = VectorField<T>;
    fn sub(self, rhs: &VectorField<T>) -> VectorField<T> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<T: Real> Neg for &VectorField<T> {
    type Output = VectorField<T>;
    fn neg(self) -> VectorField<T> {
        self.map_components(|_, c| -c)
    }
}

/// A near-identity map `Phi = Id + disp` with the displacement stored as a
/// field. X-displacements live in the universal cover of the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Diffeo<T: Real> {
    disp: VectorField<T>,
}

impl<T: Real> Diffeo<T> {
    pub fn identity(d: usize, n: usize, cap: u32) -> Self {
        Diffeo {
            disp: VectorField::zero(d, n, cap),
        }
    }

    pub fn from_displacement(disp: VectorField<T>) -> Self {
        Diffeo { disp }
    }

    pub fn displacement(&self) -> &VectorField<T> {
        &self.disp
    }

    pub fn into_displacement(self) -> VectorField<T> {
        self.disp
    }

    pub fn dims(&self) -> (usize, usize) {
        self.disp.dims()
    }

    pub fn cap(&self) -> u32 {
        self.disp.cap()
    }

    pub fn is_identity(&self) -> bool {
        self.disp.is_zero()
    }

    /// X-displacements of order >= 1 and Y-displacements of order >= 2.
    pub fn is_tangent_to_identity(&self) -> bool {
        self.disp.is_tangent_displacement()
    }

    pub fn truncate(&self, k: u32) -> Result<Self> {
        Ok(Diffeo {
            disp: self.disp.truncate(k)?,
        })
    }

    fn require_tangent(&self) -> Result<()> {
        if self.is_tangent_to_identity() {
            Ok(())
        } else {
            Err(Error::NotTangentToIdentity)
        }
    }

    /// `T^K(R o Phi)` by the Taylor expansion `sum_I (1/I!) d_I R . disp^I`.
    pub fn compose_field(&self, r: &VectorField<T>) -> Result<VectorField<T>> {
        self.require_tangent()?;
        r.check(&self.disp)?;
        let mut out = r.clone();
        let vars: Vec<usize> = (0..r.d + r.n)
            .filter(|&v| !self.disp.comps[v].is_zero())
            .collect();
        if vars.is_empty() || r.is_zero() {
            return Ok(out);
        }
        let (d, n) = r.dims();
        let power = Series::one(d, n, r.cap + 1);
        let mut counts = vec![0u32; d + n];
        self.taylor_dfs(&vars, 0, &r.comps, &power, &mut counts, &mut out.comps);
        Ok(out)
    }

    fn taylor_dfs(
        &self,
        vars: &[usize],
        start: usize,
        derivs: &[Series<T>],
        power: &Series<T>,
        counts: &mut [u32],
        out: &mut [Series<T>],
    ) {
        let d = self.disp.d;
        let top = self.disp.cap + 1;
        for (pos, &v) in vars.iter().enumerate().skip(start) {
            let var = if v < d { Var::X(v) } else { Var::Y(v - d) };
            let next_power = power
                .mul_trunc(&self.disp.comps[v], top)
                .scale(&real(T::one() / T::from_i64(counts[v] as i64 + 1)));
            if next_power.is_zero() {
                continue;
            }
            let p_ord = next_power.order();
            let mut alive = false;
            let next_derivs: Vec<Series<T>> = derivs
                .iter()
                .map(|g| {
                    let dg = g.derivative(var);
                    if !dg.is_zero() && dg.order() + p_ord <= dg.cap() {
                        alive = true;
                    }
                    dg
                })
                .collect();
            if !alive {
                continue;
            }
            for (o, dg) in out.iter_mut().zip(&next_derivs) {
                if !dg.is_zero() {
                    *o += &dg.mul_trunc(&next_power, o.cap());
                }
            }
            counts[v] += 1;
            self.taylor_dfs(vars, pos, &next_derivs, &next_power, counts, out);
            counts[v] -= 1;
        }
    }

    /// `DPhi . V = V + (V(disp_L))_L`.
    pub fn jacobian_apply(&self, v: &VectorField<T>) -> Result<VectorField<T>> {
        let dv = v.apply_to_field(&self.disp)?;
        Ok(v + &dv)
    }

    /// `self o inner`, whose displacement is `inner.disp + self.disp o inner`.
    pub fn compose(&self, inner: &Diffeo<T>) -> Result<Diffeo<T>> {
        let outer = inner.compose_field(&self.disp)?;
        Ok(Diffeo {
            disp: &inner.disp + &outer,
        })
    }
}

/// `T^k(DPhi . G) - T^k(F o Phi)` computed from `T^k F`, `T^k G`, `T^k Phi`.
pub fn pushforward_defect<T: Real>(
    f: &VectorField<T>,
    phi: &Diffeo<T>,
    g: &VectorField<T>,
    k: u32,
) -> Result<VectorField<T>> {
    let f = f.truncate(k)?;
    let g = g.truncate(k)?;
    let phi = phi.truncate(k)?;
    let lhs = phi.jacobian_apply(&g)?;
    let rhs = phi.compose_field(&f)?;
    Ok(&lhs - &rhs)
}

/// Norm of the order-`k` conjugacy defect; zero iff `Phi` conjugates `G` to `F` through order `k`.
pub fn pushforward_residual<T: Real>(
    f: &VectorField<T>,
    phi: &Diffeo<T>,
    g: &VectorField<T>,
    k: u32,
    p: &NormParams,
) -> Result<f64> {
    Ok(pushforward_defect(f, phi, g, k)?.norm(p))
}

/// Sum of the coefficients' moduli, useful for float comparisons.
pub fn coefficient_mass<T: Real>(f: &VectorField<T>) -> f64 {
    f.terms().map(|(_, _, c)| crate::scalar::modulus(c)).fold(0.0, |acc, x| acc + x)
}
