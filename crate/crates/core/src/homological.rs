//! The homological equation `[G, a S] = R` for resonant `a` with constant
//! part 1 and nonresonant `R`.
//!
//! Writing `[G, a S] = D G + N G` with `D G = a [G, S]` and
//! `N G = G(a) S`, the operator `N` is nilpotent (`N^2 = 0`) and commutes
//! with `D`, so `G = D^{-1}(R - N D^{-1} R)`.

use crate::error::{Error, Result};
use crate::field::{QuasilinearData, VectorField};
use crate::resonance::{
    checked_division, component_shift, divisor, is_resonant, require_nonresonant, split_frequencies,
};
use crate::scalar::{approx_eq, real, Real};
use crate::schedule::RadiiLadder;
use crate::series::{NormParams, Series};

/// Constants of the norm estimates; all default to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateConstants {
    /// `C'` of the low-frequency estimate.
    pub c_prime: f64,
    /// `C_{n,d,S}` of the high-frequency estimate.
    pub c_nds: f64,
}

impl Default for EstimateConstants {
    fn default() -> Self {
        EstimateConstants {
            c_prime: 1.0,
            c_nds: 1.0,
        }
    }
}

/// Data needed to evaluate the norm estimates of a solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateInputs {
    pub ladder: RadiiLadder,
    /// `g(m_k)`.
    pub g: f64,
    /// `epsilon_k`.
    pub epsilon: f64,
    pub constants: EstimateConstants,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomologicalProblem<T: Real> {
    a: Series<T>,
    qd: QuasilinearData<T>,
    rhs: VectorField<T>,
    m_k: u32,
    m_next: u32,
}

impl<T: Real> HomologicalProblem<T> {
    /// Validates `a` (resonant, constant part 1, same cap as `rhs`) and
    /// `rhs` (nonresonant, quasi-degrees in `m_k..m_next`).
    pub fn new(
        a: Series<T>,
        qd: QuasilinearData<T>,
        rhs: VectorField<T>,
        m_k: u32,
        m_next: u32,
    ) -> Result<Self> {
        if a.dims() != qd.dims() || rhs.dims() != qd.dims() {
            return Err(Error::DimensionMismatch {
                expected: qd.dims(),
                found: if a.dims() != qd.dims() { a.dims() } else { rhs.dims() },
            });
        }
        if a.cap() != rhs.cap() {
            return Err(Error::CapMismatch(a.cap(), rhs.cap()));
        }
        if !approx_eq(&a.constant_term(), &real(T::one()), qd.tol().cmp) {
            return Err(Error::NotUnit);
        }
        if let Some((idx, _)) = a.terms().find(|(idx, _)| !is_resonant(idx, &qd, None)) {
            return Err(Error::Invalid(format!(
                "the multiplier a must be resonant, but it has a term at {idx:?}"
            )));
        }
        require_nonresonant(&rhs, &qd)?;
        if !rhs.is_zero() {
            let low = rhs.order();
            if low < m_k {
                return Err(Error::PerturbationOrder {
                    required: m_k,
                    found: low,
                });
            }
            if m_next == 0 || !rhs.quasi_degree_range(m_next, u32::MAX).is_zero() {
                return Err(Error::Invalid(format!(
                    "right-hand side has terms of quasi-degree >= m_next = {m_next}"
                )));
            }
        }
        Ok(HomologicalProblem {
            a,
            qd,
            rhs,
            m_k,
            m_next,
        })
    }

    pub fn a(&self) -> &Series<T> {
        &self.a
    }

    pub fn qd(&self) -> &QuasilinearData<T> {
        &self.qd
    }

    pub fn rhs(&self) -> &VectorField<T> {
        &self.rhs
    }

    pub fn m_k(&self) -> u32 {
        self.m_k
    }

    pub fn m_next(&self) -> u32 {
        self.m_next
    }

    fn cap(&self) -> u32 {
        self.rhs.cap()
    }
}

/// `D F = a [F, S]`.
pub fn operator_d<T: Real>(f: &VectorField<T>, prob: &HomologicalProblem<T>) -> Result<VectorField<T>> {
    let s = prob.qd.s_field(f.cap());
    f.bracket(&s)?.mul_series(&prob.a)
}

/// `N F = F(a) S`.
pub fn operator_n<T: Real>(f: &VectorField<T>, prob: &HomologicalProblem<T>) -> Result<VectorField<T>> {
    let fa = f.apply(&prob.a);
    prob.qd.s_field(f.cap()).mul_series(&fa)
}

/// The inverse of `D` on nonresonant fields: `-(R a^{-1})_{P,Q} / divisor`
/// termwise, so that `D(D^{-1} R) = R`.
pub fn d_inverse<T: Real>(r: &VectorField<T>, prob: &HomologicalProblem<T>) -> Result<VectorField<T>> {
    require_nonresonant(r, &prob.qd)?;
    let w = r.mul_series(&prob.a.invert_unit()?)?;
    let d = r.dims().0;
    let mut comps = Vec::with_capacity(w.components().len());
    for (l, c) in w.components().iter().enumerate() {
        let shift = component_shift(d, l);
        let mut out = Series::zero(c.dims().0, c.dims().1, c.cap());
        for (idx, v) in c.terms() {
            let div = divisor(idx, &prob.qd, shift);
            out.add_term(idx.clone(), -checked_division(v, &div, &prob.qd, l, idx)?);
        }
        comps.push(out);
    }
    let (d, n) = r.dims();
    VectorField::from_components(d, n, r.cap(), comps)
}

fn solve_part<T: Real>(r: &VectorField<T>, prob: &HomologicalProblem<T>) -> Result<VectorField<T>> {
    if r.is_zero() {
        return Ok(r.clone());
    }
    let x = d_inverse(r, prob)?;
    let corrected = r - &operator_n(&x, prob)?;
    d_inverse(&corrected, prob)
}

/// Norms of the two parts of the solution and the right-hand sides of
/// their estimates, all at the radii `(r_3, delta_3)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HomologicalReport {
    /// Terms of the right-hand side in low-frequency classes.
    pub low_terms: usize,
    /// Terms of the right-hand side in high-frequency classes.
    pub high_terms: usize,
    pub norm_g_low: Option<f64>,
    pub norm_g_high: Option<f64>,
    pub bound_g_low: Option<f64>,
    /// `None` when `r - r' - epsilon_k <= 0`, where the estimate says nothing.
    pub bound_g_high: Option<f64>,
    /// `|a - 1|` at `(r_k, delta_k)`, expected to be at most 1/2.
    pub a_distance: Option<f64>,
}

impl HomologicalReport {
    /// Whether every evaluated estimate holds.
    pub fn within_bounds(&self) -> bool {
        let ok = |n: Option<f64>, b: Option<f64>| match (n, b) {
            (Some(n), Some(b)) => n <= b,
            _ => true,
        };
        ok(self.norm_g_low, self.bound_g_low)
            && ok(self.norm_g_high, self.bound_g_high)
            && self.a_distance.is_none_or(|x| x <= 0.5)
    }
}

fn low_bound(
    inputs: &EstimateInputs,
    dims: (usize, usize),
    m_k: u32,
    a_norm: f64,
    c_omega: f64,
    r_norm: f64,
) -> f64 {
    let l = &inputs.ladder;
    let (d, n) = (dims.0 as i32, dims.1 as i32);
    let ld1 = (l.delta1 / l.delta).ln().abs();
    let ld2 = (l.delta2 / l.delta1).ln().abs();
    let ld3 = (l.delta3 / l.delta2).ln().abs();
    inputs.constants.c_prime * inputs.g.powi(2) / ((l.r - l.r1) * (l.r1 - l.r2)).powi(d + 1)
        * (l.delta2 / l.delta).powi(m_k as i32)
        * a_norm
        / (ld1 * ld2).powi(n + 1)
        * c_omega
        * r_norm
        / ((l.r2 - l.r3).powi(2 * d + 4) * ld3.powi(2 * n + 4))
}

fn high_bound(inputs: &EstimateInputs, dims: (usize, usize), m_k: u32, r_norm: f64) -> Option<f64> {
    let l = &inputs.ladder;
    let eps = inputs.epsilon;
    let (d, n) = (dims.0 as i32, dims.1 as i32);
    let w1 = l.r - l.r1 - eps;
    let w2 = l.r1 - l.r2 - eps;
    if w1 <= 0.0 || w2 <= 0.0 {
        return None;
    }
    let ld1 = (l.delta1 / l.delta).ln().abs();
    let ld2 = (l.delta2 / l.delta1).ln().abs();
    let ld3 = (l.delta3 / l.delta2).ln().abs();
    Some(
        inputs.constants.c_nds * r_norm * (l.delta2 / l.delta).powi(m_k as i32) / (w1 * w2).powi(d + 1)
            * (-(l.r - l.r2 - 2.0 * eps) * m_k as f64).exp()
            / (ld1 * ld2).powi(n + 1)
            / ((l.r2 - l.r3).powi(2 * d + 4) * ld3.powi(2 * n + 4)),
    )
}

/// Solves `[G, a S] = rhs`, treating low- and high-frequency classes
/// separately, and evaluates the norm estimates when `inputs` is given.
pub fn solve_homological<T: Real>(
    prob: &HomologicalProblem<T>,
    inputs: Option<&EstimateInputs>,
) -> Result<(VectorField<T>, HomologicalReport)> {
    let (low, high) = split_frequencies(&prob.rhs, &prob.qd, prob.m_k, prob.cap())?;
    let g_low = solve_part(&low, prob)?;
    let g_high = solve_part(&high, prob)?;
    let mut report = HomologicalReport {
        low_terms: low.num_terms(),
        high_terms: high.num_terms(),
        ..Default::default()
    };
    if let Some(inp) = inputs {
        let l = &inp.ladder;
        let at = |r: f64, delta: f64| NormParams { r, delta };
        let p0 = at(l.r, l.delta);
        let p2 = at(l.r2, l.delta2);
        let p3 = at(l.r3, l.delta3);
        let dims = prob.qd.dims();
        let one = Series::one(dims.0, dims.1, prob.a.cap());
        report.a_distance = Some((&prob.a - &one).weighted_norm(&p0));
        report.norm_g_low = Some(g_low.norm(&p3));
        report.norm_g_high = Some(g_high.norm(&p3));
        report.bound_g_low = Some(low_bound(
            inp,
            dims,
            prob.m_k,
            prob.a.weighted_norm(&p2),
            prob.qd.c_omega(),
            low.norm(&p0),
        ));
        report.bound_g_high = high_bound(inp, dims, prob.m_k, high.norm(&p0));
    }
    Ok((&g_low + &g_high, report))
}
