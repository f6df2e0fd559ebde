//! Order-by-order formal normalization and the checks attached to it:
//! the A-condition (normal form proportional to `S`) and resonance of
//! diffeomorphisms.

use crate::error::{Error, Result};
use crate::field::{pushforward_defect, pushforward_residual, Diffeo, QuasilinearData, VectorField};
use crate::resonance::{checked_division, component_shift, divisor, is_nonresonant_field, is_resonant, is_resonant_field};
use crate::scalar::{approx_eq, real, Real};
use crate::series::{NormParams, Series};

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormResult<T: Real> {
    /// Tangent-to-identity conjugacy with zero resonant part.
    pub phi: Diffeo<T>,
    /// `S + N` with `N` resonant.
    pub nf: VectorField<T>,
    /// Conjugacy residual at orders `1..=K`.
    pub per_order_residuals: Vec<f64>,
}

/// Errors unless `T^0 F = S` (up to `tol.cmp` on float backends).
pub fn check_quasilinear<T: Real>(f: &VectorField<T>, qd: &QuasilinearData<T>) -> Result<()> {
    if f.dims() != qd.dims() {
        return Err(Error::DimensionMismatch {
            expected: qd.dims(),
            found: f.dims(),
        });
    }
    let t0 = f.truncate(0)?;
    if !t0.approx_eq(&qd.s_field(0), qd.tol().cmp) {
        return Err(Error::QuasilinearMismatch);
    }
    Ok(())
}

/// Computes `Phi` and `NF = S + N` with `N` resonant such that `Phi`
/// conjugates `NF` to `F` through order `K`.
///
/// At order `k` the degree-`k` part `H` of the defect
/// `T^k(F o Phi) - T^k(DPhi . NF)` is known from lower orders; the new
/// terms must satisfy `[S, disp_k] + N_k = H`, so `N_k = H_res` and each
/// nonresonant coefficient of `disp_k` is `H / divisor`.
pub fn normalize<T: Real>(
    f: &VectorField<T>,
    qd: &QuasilinearData<T>,
    order: u32,
    params: &NormParams,
) -> Result<NormalFormResult<T>> {
    check_quasilinear(f, qd)?;
    let f = f.truncate(order)?;
    let (d, n) = qd.dims();
    let mut disp = VectorField::zero(d, n, order);
    let mut nf = qd.s_field(order);

    for k in 1..=order {
        let phi = Diffeo::from_displacement(disp.clone());
        let h = pushforward_defect(&f, &phi, &nf, k)?.quasi_homogeneous_part(k);
        // defect = DPhi.NF - F o Phi, so the equation reads [S, disp_k] + N_k = -defect
        let mut new_disp = Vec::with_capacity(d + n);
        let mut new_n = Vec::with_capacity(d + n);
        for (l, comp) in h.components().iter().enumerate() {
            let shift = component_shift(d, l);
            let mut dl = Series::zero(d, n, disp.component(l).cap());
            let mut nl = Series::zero(d, n, nf.component(l).cap());
            for (idx, c) in comp.terms() {
                let c = -c.clone();
                let v = divisor(idx, qd, shift);
                if is_resonant(idx, qd, shift) {
                    nl.add_term(idx.clone(), c);
                } else {
                    dl.add_term(idx.clone(), checked_division(&c, &v, qd, l, idx)?);
                }
            }
            new_disp.push(dl);
            new_n.push(nl);
        }
        disp += &VectorField::from_components(d, n, order, new_disp)?;
        nf += &VectorField::from_components(d, n, order, new_n)?;
    }

    let phi = Diffeo::from_displacement(disp);
    let per_order_residuals = (1..=order)
        .map(|k| pushforward_residual(&f, &phi, &nf, k, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalFormResult {
        phi,
        nf,
        per_order_residuals,
    })
}

/// Verdict of the A-condition check.
#[derive(Clone, Debug, PartialEq)]
pub struct ACondition<T: Real> {
    pub holds: bool,
    /// `a` with `nf = a S` through the checked order, when it holds.
    pub witness: Option<Series<T>>,
}

/// Whether `T^k nf = T^k(a S)` for the series `a = nf_j / omega_j` built
/// from the first nonzero frequency, with `a(0, 0) = 1`.
pub fn check_a_condition<T: Real>(
    nf: &VectorField<T>,
    qd: &QuasilinearData<T>,
    k: u32,
) -> Result<ACondition<T>> {
    let j = qd
        .omega()
        .iter()
        .position(|w| !w.is_zero())
        .ok_or(Error::AllFrequenciesZero)?;
    let nf = nf.truncate(k)?;
    let a = nf
        .component(j)
        .scale(&(real(T::one()) / real(qd.omega()[j].clone())));
    let tol = qd.tol().cmp;
    let unit = approx_eq(&a.constant_term(), &real(T::one()), tol);
    let prop = qd.s_field(k).mul_series(&a)?;
    let holds = unit && prop.approx_eq(&nf, tol);
    Ok(ACondition {
        holds,
        witness: holds.then_some(a),
    })
}

/// Like [`check_a_condition`], but an A-condition failure is an error.
pub fn require_a_condition<T: Real>(
    nf: &VectorField<T>,
    qd: &QuasilinearData<T>,
    k: u32,
) -> Result<Series<T>> {
    check_a_condition(nf, qd, k)?
        .witness
        .ok_or(Error::ACondition { order: k })
}

/// Whether every displacement term of `T^k Phi` is resonant (shifted on Y).
pub fn check_resonant_diffeo<T: Real>(phi: &Diffeo<T>, qd: &QuasilinearData<T>, k: u32) -> Result<bool> {
    Ok(is_resonant_field(&phi.truncate(k)?.into_displacement(), qd))
}

/// Whether every displacement term of `T^k Phi` is nonresonant.
pub fn check_nonresonant_diffeo<T: Real>(
    phi: &Diffeo<T>,
    qd: &QuasilinearData<T>,
    k: u32,
) -> Result<bool> {
    Ok(is_nonresonant_field(&phi.truncate(k)?.into_displacement(), qd))
}
