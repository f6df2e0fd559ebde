//! Divisors `i<P,omega> + <Q,Lambda>`, resonant decompositions, divisor
//! classes and the low/high frequency split.
//!
//! The Y-component `d + j` of a field uses the shifted divisor
//! `i<P,omega> + <Q,Lambda> - lambda_j`, which is the eigenvalue of
//! `[S, .]` on the monomial field `e^{i<P,X>} Y^Q d/dY_j`.

use std::cmp::Ordering;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::field::{QuasilinearData, VectorField};
use crate::index::{index_box, MultiIndex};
use crate::scalar::{is_negligible, modulus, real, Coeff, Real};
use crate::series::Series;

/// A divisor value together with the index it was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor<T: Real> {
    pub value: Coeff<T>,
    pub source: MultiIndex,
}

/// `i<P,omega> + <Q,Lambda>`, minus `lambda_j` when `shift = Some(j)`.
pub fn divisor<T: Real>(idx: &MultiIndex, qd: &QuasilinearData<T>, shift: Option<usize>) -> Coeff<T> {
    assert_eq!(idx.dims(), qd.dims(), "index dimensions");
    let mut im = T::zero();
    for (&p, w) in idx.p().iter().zip(qd.omega()) {
        if p != 0 {
            im = im + T::from_i64(p as i64) * w.clone();
        }
    }
    let mut v = Coeff::new(T::zero(), im);
    for (&q, l) in idx.q().iter().zip(qd.lambda()) {
        if q != 0 {
            v = v + l.clone() * real(T::from_i64(q as i64));
        }
    }
    if let Some(j) = shift {
        v = v - qd.lambda()[j].clone();
    }
    v
}

/// Shift used by component `l` of a field on `T^d x C^n`.
pub fn component_shift(d: usize, l: usize) -> Option<usize> {
    (l >= d).then(|| l - d)
}

/// Zero test for divisors: exact, or `|c| <= tol.res` on float backends.
pub fn divisor_vanishes<T: Real>(c: &Coeff<T>, qd: &QuasilinearData<T>) -> bool {
    is_negligible(c, qd.tol().res)
}

pub fn is_resonant<T: Real>(idx: &MultiIndex, qd: &QuasilinearData<T>, shift: Option<usize>) -> bool {
    divisor_vanishes(&divisor(idx, qd, shift), qd)
}

/// `(resonant part, nonresonant part)` of a series under the given shift.
pub fn decompose_series<T: Real>(
    f: &Series<T>,
    qd: &QuasilinearData<T>,
    shift: Option<usize>,
) -> (Series<T>, Series<T>) {
    let res = f.filter(|idx, _| is_resonant(idx, qd, shift));
    let nonres = f.filter(|idx, _| !is_resonant(idx, qd, shift));
    (res, nonres)
}

/// `(F_res, F_nr)`, Y-components using the shifted divisor.
pub fn decompose_field<T: Real>(
    f: &VectorField<T>,
    qd: &QuasilinearData<T>,
) -> (VectorField<T>, VectorField<T>) {
    let d = f.dims().0;
    let res = f.map_components(|l, c| decompose_series(c, qd, component_shift(d, l)).0);
    let nonres = f.map_components(|l, c| decompose_series(c, qd, component_shift(d, l)).1);
    (res, nonres)
}

pub fn is_resonant_field<T: Real>(f: &VectorField<T>, qd: &QuasilinearData<T>) -> bool {
    let d = f.dims().0;
    f.terms()
        .all(|(l, idx, _)| is_resonant(idx, qd, component_shift(d, l)))
}

pub fn is_nonresonant_field<T: Real>(f: &VectorField<T>, qd: &QuasilinearData<T>) -> bool {
    let d = f.dims().0;
    f.terms()
        .all(|(l, idx, _)| !is_resonant(idx, qd, component_shift(d, l)))
}

/// Errors with the first resonant term of `f`, if any.
pub fn require_nonresonant<T: Real>(f: &VectorField<T>, qd: &QuasilinearData<T>) -> Result<()> {
    let d = f.dims().0;
    for (l, idx, _) in f.terms() {
        if is_resonant(idx, qd, component_shift(d, l)) {
            return Err(Error::ResonantTerm {
                component: l,
                index: idx.clone(),
            });
        }
    }
    Ok(())
}

/// One equivalence class: all enumerated indices sharing a divisor value.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceClass<T: Real> {
    pub value: Coeff<T>,
    /// Members in canonical order.
    pub members: Vec<MultiIndex>,
}

impl<T: Real> ResonanceClass<T> {
    pub fn min_p_norm(&self) -> u32 {
        self.members.iter().map(MultiIndex::p_norm).min().unwrap_or(0)
    }
}

/// Partition of the box `|P| <= max_p`, `|Q| <= max_q` into divisor classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceClassification<T: Real> {
    pub classes: Vec<ResonanceClass<T>>,
    pub max_p: u32,
    pub max_q: u32,
    /// Index of the resonant class, which always exists (it contains `(0, 0)`).
    pub zero_class: usize,
}

impl<T: Real> ResonanceClassification<T> {
    /// Class ids `(I_0, I_inf)` for the cutoff `m`; the resonant class is in neither.
    pub fn split(&self, m: u32) -> (Vec<usize>, Vec<usize>) {
        let mut low = Vec::new();
        let mut high = Vec::new();
        for (id, class) in self.classes.iter().enumerate() {
            if id == self.zero_class {
                continue;
            }
            if class.min_p_norm() <= m {
                low.push(id);
            } else {
                high.push(id);
            }
        }
        (low, high)
    }

    pub fn zero(&self) -> &ResonanceClass<T> {
        &self.classes[self.zero_class]
    }
}

fn f64_key<T: Real>(c: &Coeff<T>) -> (f64, f64) {
    (c.re.to_f64(), c.im.to_f64())
}

fn same_value<T: Real>(a: &Coeff<T>, b: &Coeff<T>, tol: f64) -> bool {
    if T::EXACT {
        a == b
    } else {
        modulus(&(a.clone() - b.clone())) <= tol
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Groups every index of the box by divisor value: exact equality on
/// exact backends, single-linkage clustering at `tol.res` on floats.
pub fn enumerate_classes<T: Real>(
    qd: &QuasilinearData<T>,
    max_p: u32,
    max_q: u32,
) -> ResonanceClassification<T> {
    let (d, n) = qd.dims();
    let indices = index_box(d, n, max_p, max_q);
    let values: Vec<Coeff<T>> = indices.iter().map(|i| divisor(i, qd, None)).collect();
    let keys: Vec<(f64, f64)> = values.iter().map(f64_key).collect();
    let tol = if T::EXACT { 0.0 } else { qd.tol().res };

    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .partial_cmp(&keys[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut parent: Vec<usize> = (0..indices.len()).collect();
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if keys[b].0 - keys[a].0 > tol {
                break;
            }
            if same_value(&values[a], &values[b], tol) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    // `indices` is canonically sorted, so grouping by root in index order
    // yields classes ordered by their smallest member.
    let mut class_of_root = vec![usize::MAX; indices.len()];
    let mut classes: Vec<ResonanceClass<T>> = Vec::new();
    for i in 0..indices.len() {
        let r = find(&mut parent, i);
        if class_of_root[r] == usize::MAX {
            class_of_root[r] = classes.len();
            classes.push(ResonanceClass {
                value: values[i].clone(),
                members: Vec::new(),
            });
        }
        classes[class_of_root[r]].members.push(indices[i].clone());
    }
    let zero_root = find(&mut parent, 0);
    let zero_class = class_of_root[zero_root];
    ResonanceClassification {
        classes,
        max_p,
        max_q,
        zero_class,
    }
}

/// `max |divisor|^{-1}` over the nonresonant indices with `|P| <= m`, `|Q| <= m`.
pub fn g_of_m<T: Real>(qd: &QuasilinearData<T>, m: u32) -> Result<f64> {
    let (d, n) = qd.dims();
    let mut best: Option<f64> = None;
    for idx in index_box(d, n, m, m) {
        let v = divisor(&idx, qd, None);
        if divisor_vanishes(&v, qd) {
            continue;
        }
        let inv = 1.0 / modulus(&v);
        best = Some(best.map_or(inv, |b: f64| b.max(inv)));
    }
    best.ok_or(Error::NoNonResonantIndex { m })
}

/// Divisor values of the box `|P| <= m`, `|Q| <= max_q`, used to decide
/// whether a class meets low frequencies.
pub struct LowFrequencyTable<T: Real> {
    m: u32,
    values: Vec<(Coeff<T>, (f64, f64))>,
    tol: f64,
}

impl<T: Real> LowFrequencyTable<T> {
    pub fn new(qd: &QuasilinearData<T>, m: u32, max_q: u32) -> Self {
        let (d, n) = qd.dims();
        let mut values: Vec<(Coeff<T>, (f64, f64))> = index_box(d, n, m, max_q)
            .iter()
            .map(|i| {
                let v = divisor(i, qd, None);
                let k = f64_key(&v);
                (v, k)
            })
            .collect();
        values.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
        LowFrequencyTable {
            m,
            values,
            tol: if T::EXACT { 0.0 } else { qd.tol().res },
        }
    }

    /// Whether the class of the (shifted) divisor `v` of a term at `idx`
    /// contains a couple with `|P| <= m`.
    pub fn is_low(&self, idx: &MultiIndex, v: &Coeff<T>) -> bool {
        if idx.p_norm() <= self.m {
            return true;
        }
        let key = f64_key(v);
        let lo = key.0 - self.tol;
        let start = self.values.partition_point(|(_, k)| k.0 < lo);
        self.values[start..]
            .iter()
            .take_while(|(_, k)| k.0 <= key.0 + self.tol)
            .any(|(w, _)| same_value(w, v, self.tol))
    }
}

/// `(R^0, R^inf)`: a term of `R` goes to `R^0` iff its class contains a
/// couple with `|P| <= m`, searched within `|Q| <= max_q`.
pub fn split_frequencies<T: Real>(
    r: &VectorField<T>,
    qd: &QuasilinearData<T>,
    m: u32,
    max_q: u32,
) -> Result<(VectorField<T>, VectorField<T>)> {
    require_nonresonant(r, qd)?;
    let table = LowFrequencyTable::new(qd, m, max_q);
    let d = r.dims().0;
    let low = r.map_components(|l, c| {
        c.filter(|idx, _| table.is_low(idx, &divisor(idx, qd, component_shift(d, l))))
    });
    let high = r.map_components(|l, c| {
        c.filter(|idx, _| !table.is_low(idx, &divisor(idx, qd, component_shift(d, l))))
    });
    Ok((low, high))
}

/// Resonant terms are exactly those with vanishing divisor, so the zero
/// test is reused when a coefficient has to be divided by its divisor.
pub(crate) fn checked_division<T: Real>(
    c: &Coeff<T>,
    v: &Coeff<T>,
    qd: &QuasilinearData<T>,
    component: usize,
    idx: &MultiIndex,
) -> Result<Coeff<T>> {
    if divisor_vanishes(v, qd) || v.is_zero() {
        return Err(Error::ZeroDivisor {
            component,
            index: idx.clone(),
        });
    }
    Ok(c.clone() / v.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    type Q = BigRational;

    fn qd(omega: &[i64], lambda: &[i64]) -> QuasilinearData<Q> {
        QuasilinearData::new(
            omega.iter().map(|&w| Q::from_i64(w)).collect(),
            lambda.iter().map(|&l| ratio(l, 1)).collect(),
        )
        .unwrap()
    }

    fn ci(re: i64, im: i64) -> Coeff<Q> {
        Coeff::new(Q::from_i64(re), Q::from_i64(im))
    }

    #[test]
    fn divisors() {
        let a = qd(&[1], &[-1]);
        assert_eq!(divisor(&MultiIndex::new(&[1], &[0]), &a, None), ci(0, 1));
        let b = qd(&[1], &[1, -1]);
        assert_eq!(divisor(&MultiIndex::new(&[0], &[1, 1]), &b, None), ci(0, 0));
        assert_eq!(divisor(&MultiIndex::new(&[1], &[2]), &a, Some(0)), ci(-1, 1));
    }

    #[test]
    fn resonance_tests() {
        let a = qd(&[1], &[-1]);
        for idx in index_box(1, 1, 3, 3) {
            assert_eq!(is_resonant(&idx, &a, None), idx.is_zero());
        }
        let b = qd(&[1], &[1, -1]);
        for q in 0..4 {
            assert!(is_resonant(&MultiIndex::new(&[0], &[q, q]), &b, None));
        }
        assert!(!is_resonant(&MultiIndex::new(&[1], &[0, 0]), &b, None));
    }

    #[test]
    fn decompositions() {
        let b = qd(&[1], &[1, -1]);
        let f = Series::from_terms(
            1,
            2,
            3,
            [
                (MultiIndex::new(&[0], &[1, 1]), ratio(5, 1)),
                (MultiIndex::new(&[1], &[1, 0]), ratio(2, 1)),
            ],
        );
        let (res, nr) = decompose_series(&f, &b, None);
        assert_eq!(res.len(), 1);
        assert_eq!(res.coeff_at(&[0], &[1, 1]), ratio(5, 1));
        assert_eq!(nr.coeff_at(&[1], &[1, 0]), ratio(2, 1));

        let s = b.s_field(3);
        let (res, nr) = decompose_field(&s, &b);
        assert_eq!(res, s);
        assert!(nr.is_zero());

        let w = VectorField::monomial(1, 2, 3, 1, MultiIndex::new(&[0], &[2, 1]), ratio(1, 1)).unwrap();
        assert!(is_resonant_field(&w, &b));
    }

    #[test]
    fn class_enumeration() {
        let a = qd(&[1], &[-1]);
        let c = enumerate_classes(&a, 1, 1);
        assert_eq!(c.classes.len(), 6);
        assert_eq!(c.zero().members, vec![MultiIndex::zero(1, 1)]);
        assert!(c.classes.iter().all(|k| k.members.len() == 1));

        let b = qd(&[1], &[1, -1]);
        let c = enumerate_classes(&b, 0, 2);
        assert_eq!(
            c.zero().members,
            vec![MultiIndex::zero(1, 2), MultiIndex::new(&[0], &[1, 1])]
        );
        assert!(c
            .classes
            .iter()
            .enumerate()
            .all(|(i, k)| i == c.zero_class || k.members.len() == 1));

        let c = enumerate_classes(&a, 0, 0);
        assert_eq!(c.classes.len(), 1);
    }

    #[test]
    fn g_values() {
        let a = qd(&[1], &[-1]);
        assert_eq!(g_of_m(&a, 1).unwrap(), 1.0);
        let b = qd(&[1], &[1, -1]);
        assert_eq!(g_of_m(&b, 1).unwrap(), 1.0);
        let f: QuasilinearData<f64> =
            QuasilinearData::new(vec![0.5f64.sqrt()], vec![Coeff::new(-0.3, 0.0)]).unwrap();
        for m in 1..6 {
            assert!(g_of_m(&f, m + 1).unwrap() >= g_of_m(&f, m).unwrap());
        }
    }

    #[test]
    fn frequency_split() {
        let a = qd(&[1], &[-1]);
        let low = VectorField::monomial(1, 1, 3, 0, MultiIndex::new(&[1], &[1]), ratio(1, 1)).unwrap();
        let (r0, ri) = split_frequencies(&low, &a, 1, 3).unwrap();
        assert_eq!(r0, low);
        assert!(ri.is_zero());

        let high = VectorField::monomial(1, 1, 3, 0, MultiIndex::new(&[5], &[1]), ratio(1, 1)).unwrap();
        let (r0, ri) = split_frequencies(&high, &a, 1, 3).unwrap();
        assert!(r0.is_zero());
        assert_eq!(ri, high);

        let zero = VectorField::zero(1, 1, 3);
        let (r0, ri) = split_frequencies(&zero, &a, 1, 3).unwrap();
        assert!(r0.is_zero() && ri.is_zero());

        assert!(split_frequencies(&a.s_field(3), &a, 1, 3).is_err());
    }

    #[test]
    fn classes_meeting_low_frequencies_go_low() {
        // omega = 1, lambda = (i): P = 3, Q = (0) shares its divisor with P = 0, Q = (3).
        let qd = QuasilinearData::new(vec![Q::from_i64(1)], vec![ci(0, 1)]).unwrap();
        let f = VectorField::monomial(1, 1, 3, 0, MultiIndex::new(&[3], &[1]), ratio(1, 1)).unwrap();
        let (r0, ri) = split_frequencies(&f, &qd, 1, 4).unwrap();
        assert_eq!(r0, f);
        assert!(ri.is_zero());
    }
}
