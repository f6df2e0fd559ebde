//! Fourier-Taylor multi-indices `(P, Q)` with `P` in Z^d and `Q` in N^n.

use std::fmt;

use smallvec::SmallVec;

pub type FourierIndex = SmallVec<[i32; 4]>;
pub type TaylorIndex = SmallVec<[u32; 4]>;

/// Index of the monomial `e^{i<P,X>} Y^Q`.
///
/// The derived ordering compares `(|Q|, Q, |P|, P)` lexicographically, which
/// is the canonical order used for storage and for every report.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    q_deg: u32,
    q: TaylorIndex,
    p_deg: u32,
    p: FourierIndex,
}

impl MultiIndex {
    pub fn new(p: &[i32], q: &[u32]) -> Self {
        MultiIndex {
            q_deg: q.iter().sum(),
            q: q.into(),
            p_deg: p.iter().map(|v| v.unsigned_abs()).sum(),
            p: p.into(),
        }
    }

    pub fn zero(d: usize, n: usize) -> Self {
        MultiIndex {
            q_deg: 0,
            q: SmallVec::from_elem(0, n),
            p_deg: 0,
            p: SmallVec::from_elem(0, d),
        }
    }

    pub fn p(&self) -> &[i32] {
        &self.p
    }

    pub fn q(&self) -> &[u32] {
        &self.q
    }

    /// `|P| = sum |P_j|`.
    pub fn p_norm(&self) -> u32 {
        self.p_deg
    }

    /// `|Q| = sum Q_j`, the degree in Y.
    pub fn q_norm(&self) -> u32 {
        self.q_deg
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p.len(), self.q.len())
    }

    pub fn is_zero(&self) -> bool {
        self.q_deg == 0 && self.p_deg == 0
    }

    /// Index of the product of the two monomials.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let p: FourierIndex = self.p.iter().zip(&other.p).map(|(a, b)| a + b).collect();
        let q: TaylorIndex = self.q.iter().zip(&other.q).map(|(a, b)| a + b).collect();
        MultiIndex {
            q_deg: self.q_deg + other.q_deg,
            q,
            p_deg: p.iter().map(|v| v.unsigned_abs()).sum(),
            p,
        }
    }

    /// `Q - E_j`, or `None` when `Q_j = 0`.
    pub fn lower_y(&self, j: usize) -> Option<MultiIndex> {
        if self.q[j] == 0 {
            return None;
        }
        let mut out = self.clone();
        out.q[j] -= 1;
        out.q_deg -= 1;
        Some(out)
    }

    /// `Q + E_j`.
    pub fn raise_y(&self, j: usize) -> MultiIndex {
        let mut out = self.clone();
        out.q[j] += 1;
        out.q_deg += 1;
        out
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(P={:?}, Q={:?})", self.p.as_slice(), self.q.as_slice())
    }
}

/// All `P` in Z^d with `|P| <= max`, in a fixed order.
pub fn fourier_box(d: usize, max: u32) -> Vec<FourierIndex> {
    fn rec(d: usize, budget: i64, cur: &mut Vec<i32>, out: &mut Vec<FourierIndex>) {
        if cur.len() == d {
            out.push(cur.as_slice().into());
            return;
        }
        for v in -budget..=budget {
            cur.push(v as i32);
            rec(d, budget - v.abs(), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, max as i64, &mut Vec::with_capacity(d), &mut out);
    out
}

/// All `Q` in N^n with `|Q| <= max`, in a fixed order.
pub fn taylor_box(n: usize, max: u32) -> Vec<TaylorIndex> {
    fn rec(n: usize, budget: u32, cur: &mut Vec<u32>, out: &mut Vec<TaylorIndex>) {
        if cur.len() == n {
            out.push(cur.as_slice().into());
            return;
        }
        for v in 0..=budget {
            cur.push(v);
            rec(n, budget - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Every `(P, Q)` with `|P| <= max_p` and `|Q| <= max_q`, sorted canonically.
pub fn index_box(d: usize, n: usize, max_p: u32, max_q: u32) -> Vec<MultiIndex> {
    let ps = fourier_box(d, max_p);
    let qs = taylor_box(n, max_q);
    let mut out: Vec<MultiIndex> = qs
        .iter()
        .flat_map(|q| ps.iter().map(move |p| MultiIndex::new(p, q)))
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        let idx = MultiIndex::new(&[2, -3], &[1, 4]);
        assert_eq!(idx.p_norm(), 5);
        assert_eq!(idx.q_norm(), 5);
    }

    #[test]
    fn ordering_is_degree_first() {
        let a = MultiIndex::new(&[5], &[1]);
        let b = MultiIndex::new(&[0], &[2]);
        let c = MultiIndex::new(&[1], &[1]);
        let mut v = vec![b.clone(), a.clone(), c.clone()];
        v.sort();
        assert_eq!(v, vec![c, a, b]);
    }

    #[test]
    fn box_sizes() {
        // |P| <= 2 in Z^2 has 13 points; |Q| <= 2 in N^2 has 6.
        assert_eq!(fourier_box(2, 2).len(), 13);
        assert_eq!(taylor_box(2, 2).len(), 6);
        assert_eq!(index_box(1, 1, 1, 1).len(), 6);
    }
}
