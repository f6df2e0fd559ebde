//! The Newton step removing nonresonant terms of quasi-degrees
//! `m_k..m_{k+1}` and its iteration.
//!
//! The state at step `k` is the field `N_k + R_k`, where `N_k` is resonant
//! and contains `S` (`N_0 = S`) and `R_k` has quasi-order at least `m_k`.
//! With `T = T^{m_{k+1}-1} R_k` and `Rbar` its nonresonant part, the step
//! solves `[G, N_k] = -Rbar`, sets `Phi_k = Id + G`,
//! `N_{k+1} = N_k + T - Rbar` and recovers `R_{k+1}` from
//! `DPhi_k . (N_{k+1} + R_{k+1}) = (N_k + R_k) o Phi_k`.

use crate::error::{Error, Result};
use crate::field::{pushforward_defect, Diffeo, QuasilinearData, VectorField};
use crate::homological::{solve_homological, EstimateConstants, EstimateInputs, HomologicalProblem, HomologicalReport};
use crate::normal_form::{check_quasilinear, require_a_condition};
use crate::resonance::{decompose_field, is_resonant_field};
use crate::scalar::Real;
use crate::schedule::{radii_ladder, BrjunoSchedule, IterationParams};
use crate::series::{NormParams, Series, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct IterationState<T: Real> {
    pub k: usize,
    /// Resonant part, including `S`.
    pub n: VectorField<T>,
    /// Remainder of quasi-order at least `m_k`.
    pub r: VectorField<T>,
}

impl<T: Real> IterationState<T> {
    /// `N_0 = S`, `R_0 = F - S`.
    pub fn initial(f: &VectorField<T>, qd: &QuasilinearData<T>) -> Result<Self> {
        check_quasilinear(f, qd)?;
        let s = qd.s_field(f.cap());
        let r = f - &s;
        // T^0 F = S only fixes the degree-0 terms up to tolerance on floats
        let r = r.quasi_degree_range(1, u32::MAX);
        Ok(IterationState { k: 0, n: s, r })
    }

    /// `N_k + R_k`.
    pub fn field(&self) -> VectorField<T> {
        &self.n + &self.r
    }
}

/// Shared inputs of every step.
#[derive(Clone, Debug)]
pub struct IterationContext<'a, T: Real> {
    pub qd: &'a QuasilinearData<T>,
    pub sched: &'a BrjunoSchedule,
    pub params: Option<&'a IterationParams>,
    pub constants: EstimateConstants,
    /// Radii at which norms are compared across steps.
    pub reference: NormParams,
}

/// A norm together with the bound it is compared against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub m_k: u64,
    pub m_next: u64,
    /// Terms of the A-condition witness `a_k`.
    pub witness_terms: usize,
    /// Nonresonant terms removed at this step.
    pub removed_terms: usize,
    /// Quasi-order of `R_{k+1}`, `cap + 1` when it vanishes.
    pub next_order: u32,
    pub order_ok: bool,
    /// Norm at the reference radii of `DPhi_k . (N_{k+1} + R_{k+1}) - (N_k + R_k) o Phi_k`.
    pub step_residual: f64,
    /// Norm at the reference radii of the defect of `Psi_k` between `N_{k+1} + R_{k+1}` and `F`.
    pub psi_residual: f64,
    /// `|R_k|` and `|R_{k+1}|` at the reference radii.
    pub r_norm_ref: f64,
    pub r_next_norm_ref: f64,
    /// `|R_k|` at `(r_k, delta_k)` against `zeta_k`.
    pub r_norm: Option<BoundCheck>,
    /// `|N_k - S|` at `(r_k, delta_k)` against `eta_k`.
    pub n_norm: Option<BoundCheck>,
    /// `|Phi_k - Id|` at `(r_{k+1}, delta_{k+1})` against `zeta_{k+1}`.
    pub phi_norm: Option<BoundCheck>,
    /// `|DPhi_k - I|` at `(r_{k+1}, delta_{k+1})` against `zeta_{k+1}`.
    pub dphi_norm: Option<BoundCheck>,
    /// `|DPsi_k - I|` at `(r_{k+1}, delta_{k+1})` against `e^{1/8} / 8`.
    pub dpsi_norm: Option<BoundCheck>,
    pub homological: HomologicalReport,
}

impl StepRecord {
    /// Whether all evaluated norm bounds hold.
    pub fn bounds_hold(&self) -> bool {
        [self.r_norm, self.n_norm, self.phi_norm, self.dphi_norm, self.dpsi_norm]
            .iter()
            .flatten()
            .all(BoundCheck::holds)
            && self.homological.within_bounds()
    }
}

/// `max_{j} |d_j G|` over all variables, the norm of `DG`.
pub fn jacobian_norm<T: Real>(g: &VectorField<T>, p: &NormParams) -> f64 {
    let (d, n) = g.dims();
    let vars = (0..d).map(Var::X).chain((0..n).map(Var::Y));
    vars.map(|v| {
        g.components()
            .iter()
            .map(|c| c.derivative(v).weighted_norm(p))
            .fold(0.0, f64::max)
    })
    .fold(0.0, f64::max)
}

/// Solves `(I + DG) W = rhs` with `DG . W = (W(G_L))_L` by the terminating
/// Neumann series; `G` has positive quasi-order.
fn neumann_solve<T: Real>(g: &VectorField<T>, rhs: &VectorField<T>) -> Result<VectorField<T>> {
    let mut acc = rhs.clone();
    let mut term = rhs.clone();
    let limit = rhs.cap() + 2;
    for _ in 0..limit {
        term = -&term.apply_to_field(g)?;
        if term.is_zero() {
            return Ok(acc);
        }
        acc += &term;
    }
    if term.is_zero() {
        Ok(acc)
    } else {
        Err(Error::Invalid("Neumann series for (I + DG) did not terminate".into()))
    }
}

fn params_at(sched: &BrjunoSchedule, params: &IterationParams, k: usize) -> Option<NormParams> {
    let delta = *params.delta.get(k)?;
    let r = sched.r(k).ok()?;
    Some(NormParams { r, delta })
}

/// One Newton step from `state`; the returned record lacks the `Psi`
/// fields, which [`run_iteration`] fills in.
pub fn iteration_step<T: Real>(
    state: &IterationState<T>,
    ctx: &IterationContext<'_, T>,
) -> Result<(IterationState<T>, Diffeo<T>, StepRecord)> {
    let qd = ctx.qd;
    let k = state.k;
    let cap = state.r.cap();
    let m_k = ctx.sched.m(k)?;
    let m_next = ctx.sched.m(k + 1)?;
    if m_next <= m_k {
        return Err(Error::Invalid(format!(
            "m-schedule must increase, got m_{k} = {m_k}, m_{} = {m_next}",
            k + 1
        )));
    }
    let m_k32 = m_k.min(u32::MAX as u64) as u32;
    if state.r.order() == 0 {
        return Err(Error::PerturbationOrder { required: 1, found: 0 });
    }

    let a = require_a_condition(&state.n, qd, cap)?;
    let top = (m_next - 1).min(cap as u64) as u32;
    let t = state.r.quasi_degree_range(0, top);
    let rbar = decompose_field(&t, qd).1;

    let ladder = ctx.params.and_then(|p| radii_ladder(k, p, ctx.sched).ok());
    let inputs = match (ladder, ctx.sched.g_k(k), ctx.sched.eps(k)) {
        (Some(ladder), Ok(g), eps) => Some(EstimateInputs {
            ladder,
            g,
            epsilon: eps.and_then(|e| e.ok()).unwrap_or(0.0),
            constants: ctx.constants,
        }),
        _ => None,
    };
    let m_next32 = (top + 1).max(m_k32);
    let prob = HomologicalProblem::new(a.clone(), qd.clone(), -&rbar, m_k32.min(rbar.order()), m_next32)?;
    let (g, hom_report) = solve_homological(&prob, inputs.as_ref())?;
    let phi = Diffeo::from_displacement(g.clone());

    let n_next = &(&state.n + &t) - &rbar;
    let field = state.field();
    let composed = phi.compose_field(&field)?;
    let dn_g = g.apply_to_field(&state.n)?;
    let dg_w = (&t - &rbar).apply_to_field(&g)?;
    let mut rhs = &(&state.r - &t) + &composed;
    rhs -= &field;
    rhs -= &dn_g;
    rhs -= &dg_w;
    let r_next = neumann_solve(&g, &rhs)?;

    let next_order = r_next.order();
    let order_ok = r_next.is_zero() || next_order as u64 >= m_next;
    let next = IterationState {
        k: k + 1,
        n: n_next,
        r: r_next,
    };
    let defect = pushforward_defect(&field, &phi, &next.field(), cap)?;
    let s = qd.s_field(cap);

    let mut record = StepRecord {
        k,
        m_k,
        m_next,
        witness_terms: a.len(),
        removed_terms: rbar.num_terms(),
        next_order,
        order_ok,
        step_residual: defect.norm(&ctx.reference),
        psi_residual: 0.0,
        r_norm_ref: state.r.norm(&ctx.reference),
        r_next_norm_ref: next.r.norm(&ctx.reference),
        r_norm: None,
        n_norm: None,
        phi_norm: None,
        dphi_norm: None,
        dpsi_norm: None,
        homological: hom_report,
    };
    if let Some(params) = ctx.params {
        if let Some(p) = params_at(ctx.sched, params, k) {
            record.r_norm = Some(BoundCheck {
                value: state.r.norm(&p),
                bound: params.zeta[k],
            });
            record.n_norm = Some(BoundCheck {
                value: (&state.n - &s).norm(&p),
                bound: params.eta[k],
            });
        }
        if let Some(p) = params_at(ctx.sched, params, k + 1) {
            record.phi_norm = Some(BoundCheck {
                value: g.norm(&p),
                bound: params.zeta[k + 1],
            });
            record.dphi_norm = Some(BoundCheck {
                value: jacobian_norm(&g, &p),
                bound: params.zeta[k + 1],
            });
        }
    }
    Ok((next, phi, record))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace<T: Real> {
    pub records: Vec<StepRecord>,
    /// Final state.
    pub state: IterationState<T>,
    /// `Psi = Phi_0 o ... o Phi_{k}`.
    pub psi: Diffeo<T>,
    /// Whether the iteration stopped because `R_k` vanished.
    pub reached_fixed_point: bool,
    /// A-condition witnesses `a_k` of every executed step.
    pub witnesses: Vec<Series<T>>,
}

impl<T: Real> IterationTrace<T> {
    /// Whether every step removed its terms exactly and raised the order.
    pub fn exact(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.order_ok && r.step_residual == 0.0 && r.psi_residual == 0.0)
    }
}

/// Runs up to `steps` Newton steps from `F = S + R`, composing
/// `Psi_k = Psi_{k-1} o Phi_k` and checking that `Psi_k` conjugates
/// `N_{k+1} + R_{k+1}` to `F` at the field's cap.
pub fn run_iteration<T: Real>(
    f: &VectorField<T>,
    ctx: &IterationContext<'_, T>,
    steps: usize,
) -> Result<IterationTrace<T>> {
    let mut state = IterationState::initial(f, ctx.qd)?;
    let m0 = ctx.sched.m(0)? as u32;
    if !state.r.is_zero() && state.r.order() < m0 {
        return Err(Error::PerturbationOrder {
            required: m0,
            found: state.r.order(),
        });
    }
    let (d, n) = f.dims();
    let cap = f.cap();
    let mut psi = Diffeo::identity(d, n, cap);
    let mut records = Vec::new();
    let mut witnesses = Vec::new();
    let mut reached_fixed_point = false;
    let psi_bound = 0.125f64.exp() / 8.0;
    for _ in 0..steps {
        if state.r.is_zero() {
            reached_fixed_point = true;
            break;
        }
        witnesses.push(require_a_condition(&state.n, ctx.qd, cap)?);
        let (next, phi, mut record) = iteration_step(&state, ctx)?;
        psi = psi.compose(&phi)?;
        record.psi_residual = pushforward_defect(f, &psi, &next.field(), cap)?.norm(&ctx.reference);
        if let Some(params) = ctx.params {
            if let Some(p) = params_at(ctx.sched, params, state.k + 1) {
                record.dpsi_norm = Some(BoundCheck {
                    value: jacobian_norm(psi.displacement(), &p),
                    bound: psi_bound,
                });
            }
        }
        records.push(record);
        state = next;
    }
    if state.r.is_zero() {
        reached_fixed_point = true;
    }
    Ok(IterationTrace {
        records,
        state,
        psi,
        reached_fixed_point,
        witnesses,
    })
}

/// Whether `N_k - S` is resonant.
pub fn resonant_normal_part<T: Real>(state: &IterationState<T>, qd: &QuasilinearData<T>) -> bool {
    let s = qd.s_field(state.n.cap());
    is_resonant_field(&(&state.n - &s), qd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::MultiIndex;
    use crate::scalar::ratio;
    use crate::schedule::{GFunction, MSchedule, RSchedule};
    use num_rational::BigRational;
    use std::collections::BTreeMap;

    type Q = BigRational;

    fn qd(omega: &[i64], lambda: &[i64]) -> QuasilinearData<Q> {
        QuasilinearData::new(
            omega.iter().map(|&w| Q::from_i64(w)).collect(),
            lambda.iter().map(|&l| ratio(l, 1)).collect(),
        )
        .unwrap()
    }

    fn sched(ms: Vec<u64>) -> BrjunoSchedule {
        BrjunoSchedule {
            g: GFunction::parse("2*m^3", &BTreeMap::new()).unwrap(),
            m: MSchedule::List(ms),
            epsilon: None,
            r: RSchedule::Values(vec![1.0; 8]),
            horizon: 3,
        }
    }

    fn ctx<'a>(q: &'a QuasilinearData<Q>, s: &'a BrjunoSchedule) -> IterationContext<'a, Q> {
        IterationContext {
            qd: q,
            sched: s,
            params: None,
            constants: EstimateConstants::default(),
            reference: NormParams::new(1.0, 0.5).unwrap(),
        }
    }

    #[test]
    fn zero_remainder_is_a_fixed_point() {
        let q = qd(&[1], &[-1]);
        let s = sched(vec![1, 3, 7]);
        let state = IterationState::initial(&q.s_field(4), &q).unwrap();
        let (next, phi, rec) = iteration_step(&state, &ctx(&q, &s)).unwrap();
        assert!(phi.is_identity());
        assert_eq!(next.n, state.n);
        assert!(next.r.is_zero());
        assert_eq!(rec.step_residual, 0.0);
    }

    #[test]
    fn resonant_remainder_moves_into_normal_part() {
        let q = qd(&[1], &[1, -1]);
        let s = sched(vec![1, 3, 7]);
        let w = VectorField::monomial(1, 2, 4, 0, MultiIndex::new(&[0], &[1, 1]), ratio(1, 10)).unwrap();
        let f = &q.s_field(4) + &w;
        let state = IterationState::initial(&f, &q).unwrap();
        let c = ctx(&q, &s);
        let (next, phi, _) = iteration_step(&state, &c).unwrap();
        assert!(phi.is_identity());
        assert_eq!(next.n, f);
        assert!(next.r.is_zero());
        // N_1 is no longer proportional to S
        assert!(matches!(iteration_step(&next, &c), Err(Error::ACondition { .. })));
    }

    #[test]
    fn epsilon_example_step() {
        let q = qd(&[1], &[-1]);
        let s = sched(vec![1, 3, 7]);
        let pert = VectorField::monomial(1, 1, 4, 1, MultiIndex::new(&[1], &[2]), ratio(1, 10)).unwrap();
        let f = &q.s_field(4) + &pert;
        let state = IterationState::initial(&f, &q).unwrap();
        let (next, phi, rec) = iteration_step(&state, &ctx(&q, &s)).unwrap();
        assert_eq!(next.n, q.s_field(4));
        assert_eq!(phi.displacement().num_terms(), 1);
        let expect = ratio::<Q>(1, 10) / Coeff::new(Q::from_i64(-1), Q::from_i64(1));
        assert_eq!(phi.displacement().component(1).coeff_at(&[1], &[2]), expect);
        // the quadratic error DR.G sits at quasi-degree 2 < m_1; removing it
        // at the next step produces the i/200 term of the normalizing map
        assert_eq!(next.r.order(), 2);
        assert!(!rec.order_ok);
        let lead = Coeff::new(Q::from_ratio(-1, 100), Q::from_ratio(-1, 100));
        assert_eq!(next.r.component(1).coeff_at(&[2], &[3]), lead);
        assert_eq!(rec.step_residual, 0.0);
    }

    use crate::scalar::Coeff;

    #[test]
    fn proportional_system_keeps_a_condition() {
        let q = qd(&[1], &[1, -1]);
        let s = sched(vec![1, 3, 7, 15]);
        let a = &Series::one(1, 2, 5) + &Series::monomial(1, 2, 5, MultiIndex::new(&[0], &[1, 1]), ratio(1, 4));
        let f = q.s_field(5).mul_series(&a).unwrap();
        let trace = run_iteration(&f, &ctx(&q, &s), 2).unwrap();
        assert!(trace.exact());
        assert!(trace.state.r.is_zero());
        assert_eq!(trace.witnesses[0].constant_term(), ratio(1, 1));
        assert_eq!(
            require_a_condition(&trace.state.n, &q, 5).unwrap(),
            a
        );
    }

    #[test]
    fn doubling_iteration_matches_formal_normalization() {
        let q = qd(&[1], &[-1]);
        let s = sched(vec![1, 2, 4, 8]);
        let pert = VectorField::monomial(1, 1, 4, 1, MultiIndex::new(&[1], &[2]), ratio(1, 10)).unwrap();
        let f = &q.s_field(4) + &pert;
        let c = ctx(&q, &s);
        let trace = run_iteration(&f, &c, 3).unwrap();
        assert!(trace.exact());
        assert!(trace.reached_fixed_point);
        assert_eq!(trace.state.n, q.s_field(4));
        let nf = crate::normal_form::normalize(&f, &q, 4, &c.reference).unwrap();
        assert_eq!(trace.psi, nf.phi);
        assert!(resonant_normal_part(&trace.state, &q));
    }
}
