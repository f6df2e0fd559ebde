use proptest::prelude::*;

use tnf_core::homological::{operator_d, operator_n, HomologicalProblem};
use tnf_core::normal_form::normalize;
use tnf_core::resonance::{decompose_field, decompose_series, is_resonant_field};
use tnf_core::scalar::{modulus, ratio, Coeff, Real};
use tnf_core::{
    BigRational, Diffeo, ExactField, ExactQuasilinear, ExactSeries, FloatSeries, MultiIndex, NormParams, Series,
    VectorField,
};

type Q = BigRational;
type RawTerm = (Vec<i32>, Vec<u32>, i64, i64, i64);

fn raw_terms(d: usize, n: usize, max_q: u32, len: usize) -> impl Strategy<Value = Vec<RawTerm>> {
    prop::collection::vec(
        (
            prop::collection::vec(-2i32..=2, d),
            prop::collection::vec(0u32..=max_q, n),
            -5i64..=5,
            -5i64..=5,
            1i64..=4,
        ),
        0..len,
    )
}

fn coeff(re: i64, im: i64, den: i64) -> Coeff<Q> {
    Coeff::new(Q::from_ratio(re, den), Q::from_ratio(im, den))
}

fn series(d: usize, n: usize, cap: u32, raw: &[RawTerm]) -> ExactSeries {
    Series::from_terms(
        d,
        n,
        cap,
        raw.iter().map(|(p, q, re, im, den)| (MultiIndex::new(p, q), coeff(*re, *im, *den))),
    )
}

/// Terms are spread over components; Y-components get `|Q| >= 1`.
fn field(d: usize, n: usize, cap: u32, raw: &[RawTerm]) -> ExactField {
    let mut f = VectorField::zero(d, n, cap);
    for (i, (p, q, re, im, den)) in raw.iter().enumerate() {
        let l = i % (d + n);
        let mut q = q.clone();
        if l >= d && q.iter().sum::<u32>() == 0 {
            q[0] = 1;
        }
        if let Ok(m) = VectorField::monomial(d, n, cap, l, MultiIndex::new(p, &q), coeff(*re, *im, *den)) {
            f += &m;
        }
    }
    f
}

/// Removes the `|Q| = 0` part of the X-components, leaving quasi-order >= 1.
fn positive_order(f: &ExactField) -> ExactField {
    f.quasi_degree_range(1, u32::MAX)
}

fn resonant_qd() -> ExactQuasilinear {
    ExactQuasilinear::new(vec![Q::from_i64(1)], vec![ratio(1, 1), ratio(-1, 1)]).unwrap()
}

fn to_float(s: &ExactSeries) -> FloatSeries {
    s.convert(|x| x.to_f64())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_lattice(raw in raw_terms(1, 2, 4, 8), j in 0u32..=4, k in 0u32..=4) {
        let s = series(1, 2, 4, &raw);
        let lhs = s.truncate(k).unwrap().truncate(j.min(k)).unwrap();
        prop_assert_eq!(lhs, s.truncate(j.min(k)).unwrap());
    }

    #[test]
    fn order_is_additive(a in raw_terms(1, 2, 2, 5), b in raw_terms(1, 2, 2, 5)) {
        let f = series(1, 2, 6, &a);
        let g = series(1, 2, 6, &b);
        prop_assume!(!f.is_zero() && !g.is_zero());
        prop_assert_eq!((&f * &g).order(), f.order() + g.order());
    }

    #[test]
    fn ring_laws(a in raw_terms(2, 1, 2, 4), b in raw_terms(2, 1, 2, 4), c in raw_terms(2, 1, 2, 4)) {
        let (f, g, h) = (series(2, 1, 3, &a), series(2, 1, 3, &b), series(2, 1, 3, &c));
        prop_assert_eq!(&f * &g, &g * &f);
        prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
        prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
    }

    #[test]
    fn unit_inverse(raw in raw_terms(1, 2, 2, 5)) {
        let h = series(1, 2, 4, &raw).filter(|idx, _| idx.q_norm() > 0);
        let u = &Series::one(1, 2, 4) + &h;
        let inv = u.invert_unit().unwrap();
        prop_assert_eq!(&u * &inv, Series::one(1, 2, 4));
    }

    #[test]
    fn norm_is_submultiplicative(a in raw_terms(1, 2, 2, 5), b in raw_terms(1, 2, 2, 5), r in 0.1f64..1.5, delta in 0.1f64..1.5) {
        let p = NormParams::new(r, delta).unwrap();
        let f = to_float(&series(1, 2, 4, &a));
        let g = to_float(&series(1, 2, 4, &b));
        let lhs = (&f * &g).weighted_norm(&p);
        let rhs = f.weighted_norm(&p) * g.weighted_norm(&p);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn coefficients_bounded_by_norm(raw in raw_terms(2, 1, 3, 8), r in 0.1f64..1.5, delta in 0.1f64..1.5) {
        let p = NormParams::new(r, delta).unwrap();
        let s = series(2, 1, 3, &raw);
        let norm = s.weighted_norm(&p);
        for (idx, c) in s.terms() {
            let bound = norm * (-r * idx.p_norm() as f64).exp() * delta.powi(-(idx.q_norm() as i32));
            prop_assert!(modulus(c) <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bracket_is_a_lie_bracket(a in raw_terms(1, 1, 2, 4), b in raw_terms(1, 1, 2, 4), c in raw_terms(1, 1, 2, 4)) {
        let f = positive_order(&field(1, 1, 4, &a));
        let g = positive_order(&field(1, 1, 4, &b));
        let h = positive_order(&field(1, 1, 4, &c));
        prop_assert_eq!(f.bracket(&g).unwrap(), -&g.bracket(&f).unwrap());
        let jacobi = &(&f.bracket(&g.bracket(&h).unwrap()).unwrap()
            + &g.bracket(&h.bracket(&f).unwrap()).unwrap())
            + &h.bracket(&f.bracket(&g).unwrap()).unwrap();
        prop_assert!(jacobi.is_zero());
    }

    #[test]
    fn decomposition_is_a_projection(raw in raw_terms(1, 2, 3, 10)) {
        let qd = resonant_qd();
        let f = field(1, 2, 3, &raw);
        let (res, non) = decompose_field(&f, &qd);
        prop_assert_eq!(&(&res + &non), &f);
        prop_assert_eq!(decompose_field(&res, &qd).0, res.clone());
        prop_assert!(decompose_field(&non, &qd).0.is_zero());
        let (sr, sn) = decompose_series(f.component(0), &qd, None);
        prop_assert_eq!(&(&sr + &sn), f.component(0));
    }

    #[test]
    fn homological_operators_commute(raw in raw_terms(1, 2, 2, 6), araw in raw_terms(1, 2, 2, 4)) {
        let qd = resonant_qd();
        let f = positive_order(&field(1, 2, 3, &raw));
        let a_res = decompose_series(&series(1, 2, 3, &araw), &qd, None).0.filter(|idx, _| idx.q_norm() > 0);
        let a = &Series::one(1, 2, 3) + &a_res;
        let prob = HomologicalProblem::new(a, qd.clone(), VectorField::zero(1, 2, 3), 1, 4).unwrap();
        let nf = operator_n(&f, &prob).unwrap();
        prop_assert!(operator_n(&nf, &prob).unwrap().is_zero());
        let dn = operator_d(&nf, &prob).unwrap();
        let nd = operator_n(&operator_d(&f, &prob).unwrap(), &prob).unwrap();
        prop_assert_eq!(dn, nd);
    }

    #[test]
    fn normalize_conjugates_exactly(raw in raw_terms(1, 1, 3, 5)) {
        let qd = ExactQuasilinear::new(vec![Q::from_i64(1)], vec![ratio(-1, 1)]).unwrap();
        let f = &qd.s_field(3) + &positive_order(&field(1, 1, 3, &raw));
        let res = normalize(&f, &qd, 3, &NormParams::new(1.0, 0.5).unwrap()).unwrap();
        prop_assert!(res.per_order_residuals.iter().all(|&r| r == 0.0));
        prop_assert!(is_resonant_field(&(&res.nf - &qd.s_field(3)), &qd));
    }

    #[test]
    fn resonance_is_preserved(a in raw_terms(1, 2, 3, 8), b in raw_terms(1, 2, 3, 8)) {
        let qd = resonant_qd();
        let r = decompose_field(&field(1, 2, 4, &a), &qd).0;
        let disp = decompose_field(&positive_order(&field(1, 2, 4, &b)), &qd).0;
        let phi = Diffeo::from_displacement(disp);
        prop_assert!(is_resonant_field(&phi.compose_field(&r).unwrap(), &qd));
        prop_assert!(is_resonant_field(&phi.jacobian_apply(&r).unwrap(), &qd));
    }
}
