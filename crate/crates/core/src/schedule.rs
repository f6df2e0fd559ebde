//! Arithmetic side of the Newton scheme: the growth function `g`, the
//! sequences `m_k`, `epsilon_k`, `r_k`, the Brjuno sum, the checks of the
//! arithmetic assumption and the derived sequences `delta_k`, `zeta_k`,
//! `eta_k` with the radii ladder of each step.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::field::QuasilinearData;
use crate::index::{fourier_box, taylor_box, MultiIndex};
use crate::resonance::{divisor, divisor_vanishes, g_of_m};
use crate::scalar::{modulus, Real};

#[derive(Clone, Debug, PartialEq)]
enum Expr {
    Num(f64),
    M,
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Exp,
    Ln,
    Sqrt,
}

impl Expr {
    fn eval(&self, m: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::M => m,
            Expr::Neg(e) => -e.eval(m),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(m), b.eval(m));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let x = e.eval(m);
                match f {
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<char>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn err(&self) -> Error {
        Error::BadGExpression(self.src.to_string())
    }

    fn peek(&mut self) -> Option<char> {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let c = self.peek().ok_or_else(|| self.err())?;
        if self.eat('(') {
            let e = self.expr()?;
            return if self.eat(')') { Ok(e) } else { Err(self.err()) };
        }
        if c.is_ascii_digit() || c == '.' {
            let start = self.pos;
            while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit() || *c == '.' || *c == 'e')
            {
                // allow exponents like 1e-3
                if self.chars[self.pos] == 'e' && self.chars.get(self.pos + 1) == Some(&'-') {
                    self.pos += 1;
                }
                self.pos += 1;
            }
            let s: String = self.chars[start..self.pos].iter().collect();
            return s.parse().map(Expr::Num).map_err(|_| self.err());
        }
        if c.is_alphabetic() {
            let start = self.pos;
            while self.chars.get(self.pos).is_some_and(|c| c.is_alphanumeric() || *c == '_') {
                self.pos += 1;
            }
            let name: String = self.chars[start..self.pos].iter().collect();
            let func = match name.as_str() {
                "exp" => Some(Func::Exp),
                "ln" | "log" => Some(Func::Ln),
                "sqrt" => Some(Func::Sqrt),
                _ => None,
            };
            if let Some(f) = func {
                if !self.eat('(') {
                    return Err(self.err());
                }
                let e = self.expr()?;
                return if self.eat(')') {
                    Ok(Expr::Call(f, Box::new(e)))
                } else {
                    Err(self.err())
                };
            }
            if name == "m" {
                return Ok(Expr::M);
            }
            return self
                .params
                .get(&name)
                .map(|v| Expr::Num(*v))
                .ok_or_else(|| self.err());
        }
        Err(self.err())
    }
}

/// The growth function `g`, either a closed form in `m` or a table.
#[derive(Clone, Debug, PartialEq)]
pub enum GFunction {
    Expr { source: String, expr: GExpr },
    Table(BTreeMap<u64, f64>),
}

/// Parsed closed form; see [`GFunction::parse`].
#[derive(Clone, Debug, PartialEq)]
pub struct GExpr(Expr);

impl GFunction {
    /// Parses an arithmetic expression in `m` with `+ - * / ^`, parentheses,
    /// `exp`, `ln`, `sqrt` and named parameters, e.g. `"C*m^tau"`.
    pub fn parse(src: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = Parser {
            src,
            chars: src.chars().collect(),
            pos: 0,
            params,
        };
        let e = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err());
        }
        Ok(GFunction::Expr {
            source: src.to_string(),
            expr: GExpr(e),
        })
    }

    /// `g(m)` as the largest inverse divisor modulus in the box of size `m`,
    /// tabulated on the given values of `m`.
    pub fn from_divisors<T: Real>(qd: &QuasilinearData<T>, ms: &[u64]) -> Result<Self> {
        let mut table = BTreeMap::new();
        for &m in ms {
            table.insert(m, g_of_m(qd, m as u32)?);
        }
        Ok(GFunction::Table(table))
    }

    pub fn eval(&self, m: u64) -> Result<f64> {
        let v = match self {
            GFunction::Expr { expr, .. } => expr.0.eval(m as f64),
            GFunction::Table(t) => *t.get(&m).ok_or_else(|| {
                Error::Invalid(format!("g is not tabulated at m = {m}"))
            })?,
        };
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveG { m, value: v });
        }
        Ok(v)
    }
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GFunction::Expr { source, .. } => write!(f, "g(m) = {source}"),
            GFunction::Table(t) => write!(f, "g tabulated at {} points", t.len()),
        }
    }
}

/// The sequence `(m_k)`.
#[derive(Clone, Debug, PartialEq)]
pub enum MSchedule {
    /// `m_k = 2^k`.
    Doubling,
    /// `m_{k+1} = 2 m_k + 1`, i.e. `m_k = 2^{k+1} - 1`.
    Saturating,
    List(Vec<u64>),
}

impl MSchedule {
    pub fn m(&self, k: usize) -> Result<u64> {
        match self {
            MSchedule::Doubling => 1u64.checked_shl(k as u32).ok_or(Error::ScheduleExhausted(k)),
            MSchedule::Saturating => 2u64
                .checked_shl(k as u32)
                .map(|v| v - 1)
                .ok_or(Error::ScheduleExhausted(k)),
            MSchedule::List(v) => v.get(k).copied().ok_or(Error::ScheduleExhausted(k)),
        }
    }
}

impl fmt::Display for MSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MSchedule::Doubling => write!(f, "doubling"),
            MSchedule::Saturating => write!(f, "saturating"),
            MSchedule::List(v) => {
                let items: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{}", items.join(","))
            }
        }
    }
}

/// The sequence `(epsilon_k)`.
#[derive(Clone, Debug, PartialEq)]
pub enum EpsilonSchedule {
    Values(Vec<f64>),
    /// `epsilon_k = (1 - 2^{-k/2^k}) / 4 + margin`.
    Aurouet { margin: f64 },
}

impl EpsilonSchedule {
    pub fn eps(&self, k: usize) -> Result<f64> {
        match self {
            EpsilonSchedule::Values(v) => v.get(k).copied().ok_or(Error::ScheduleExhausted(k)),
            EpsilonSchedule::Aurouet { margin } => {
                let kf = k as f64;
                Ok(0.25 * (1.0 - 2f64.powf(-kf / 2f64.powf(kf))) + margin)
            }
        }
    }
}

/// The sequence `(r_k)`.
#[derive(Clone, Debug, PartialEq)]
pub enum RSchedule {
    Values(Vec<f64>),
    /// `r_k = r_0 prod_{j=1}^k g(m_j)^{-1/2^j} 2^{-2j/2^j}`.
    Aurouet { r0: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrjunoSchedule {
    pub g: GFunction,
    pub m: MSchedule,
    /// No default is assumed; items that need it are skipped when absent.
    pub epsilon: Option<EpsilonSchedule>,
    pub r: RSchedule,
    /// Number of steps over which sequences are materialized.
    pub horizon: usize,
}

impl BrjunoSchedule {
    pub fn m(&self, k: usize) -> Result<u64> {
        self.m.m(k)
    }

    /// `g(m_k)`.
    pub fn g_k(&self, k: usize) -> Result<f64> {
        self.g.eval(self.m(k)?)
    }

    pub fn eps(&self, k: usize) -> Option<Result<f64>> {
        self.epsilon.as_ref().map(|e| e.eps(k))
    }

    pub fn r(&self, k: usize) -> Result<f64> {
        match &self.r {
            RSchedule::Values(v) => v.get(k).copied().ok_or(Error::ScheduleExhausted(k)),
            RSchedule::Aurouet { r0 } => {
                let mut r = *r0;
                for j in 1..=k {
                    let two_j = 2f64.powi(j as i32);
                    r *= self.g_k(j)?.powf(-1.0 / two_j) * 2f64.powf(-2.0 * j as f64 / two_j);
                }
                Ok(r)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrjunoSum {
    pub value: f64,
    /// Magnitude of the last summand, a convergence indicator.
    pub last_term: f64,
    pub terms: usize,
}

/// `sum_{k=1}^{terms} ln g(m_k) / m_k`.
pub fn brjuno_sum(sched: &BrjunoSchedule, terms: usize) -> Result<BrjunoSum> {
    let mut value = 0.0;
    let mut last_term = 0.0;
    for k in 1..=terms {
        let m = sched.m(k)?;
        last_term = sched.g.eval(m)?.ln() / m as f64;
        value += last_term;
    }
    Ok(BrjunoSum {
        value,
        last_term: last_term.abs(),
        terms,
    })
}

/// Finite verification boxes for the items that quantify over all indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssumptionBoxes {
    /// Items are checked for `k = 0..steps`.
    pub steps: usize,
    /// Items 4 and 5 are enumerated only while `m_k <= max_m`.
    pub max_m: u64,
    /// Item 4 enumerates `m_k < |P| <= m_k + p_margin`.
    pub p_margin: u32,
}

impl Default for AssumptionBoxes {
    fn default() -> Self {
        AssumptionBoxes {
            steps: 4,
            max_m: 7,
            p_margin: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ItemStatus {
    Pass,
    Fail { k: usize, index: Option<MultiIndex>, detail: String },
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItemReport {
    pub item: u8,
    pub description: &'static str,
    pub status: ItemStatus,
    /// What was checked, e.g. the boxes used.
    pub scope: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub items: Vec<ItemReport>,
    pub brjuno: BrjunoSum,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.status == ItemStatus::Pass)
    }

    pub fn item(&self, n: u8) -> &ItemReport {
        &self.items[n as usize - 1]
    }
}

fn first_failure<I>(it: I) -> Result<ItemStatus>
where
    I: IntoIterator<Item = Result<Option<(usize, Option<MultiIndex>, String)>>>,
{
    for r in it {
        if let Some((k, index, detail)) = r? {
            return Ok(ItemStatus::Fail { k, index, detail });
        }
    }
    Ok(ItemStatus::Pass)
}

/// Checks items 1 to 7 of the arithmetic assumption independently.
/// Items 4 and 5 are enumerated over the finite boxes only.
pub fn check_assumption<T: Real>(
    qd: &QuasilinearData<T>,
    sched: &BrjunoSchedule,
    boxes: &AssumptionBoxes,
) -> Result<AssumptionReport> {
    let (d, n) = qd.dims();
    let steps = boxes.steps;
    let mut items = Vec::with_capacity(7);

    let item1 = if sched.m(0)? != 1 {
        ItemStatus::Fail {
            k: 0,
            index: None,
            detail: format!("m_0 = {} but must be 1", sched.m(0)?),
        }
    } else {
        first_failure((0..steps).map(|k| {
            let (a, b) = (sched.m(k)?, sched.m(k + 1)?);
            Ok((b > 2 * a + 1 || b <= a)
                .then(|| (k, None, format!("m_{} = {b} but m_{k} = {a}", k + 1))))
        }))?
    };
    items.push(ItemReport {
        item: 1,
        description: "m_0 = 1 and m_k < m_{k+1} <= 2 m_k + 1",
        status: item1,
        scope: format!("k < {steps}"),
    });

    let brjuno = brjuno_sum(sched, sched.horizon)?;
    items.push(ItemReport {
        item: 2,
        description: "B = sum_{k>=1} ln g(m_k) / m_k is finite",
        status: if brjuno.value.is_finite() {
            ItemStatus::Pass
        } else {
            ItemStatus::Fail {
                k: sched.horizon,
                index: None,
                detail: "partial sum is not finite".into(),
            }
        },
        scope: format!(
            "partial sum over {} terms = {:.9}, last term {:.3e}",
            brjuno.terms, brjuno.value, brjuno.last_term
        ),
    });

    let item3 = first_failure((0..steps).map(|k| {
        let (m, g) = (sched.m(k)?, sched.g_k(k)?);
        let lhs = (n as f64 + 2.0) * g * g.ln();
        Ok((lhs < m as f64).then(|| (k, None, format!("(n+2) g ln g = {lhs:.6} < m_k = {m}"))))
    }))?;
    items.push(ItemReport {
        item: 3,
        description: "(n+2) g(m_k) ln g(m_k) >= m_k",
        status: item3,
        scope: format!("k < {steps}"),
    });

    let enumerable: Vec<usize> = (0..steps)
        .filter(|&k| sched.m(k).map(|m| m <= boxes.max_m).unwrap_or(false))
        .collect();

    let item4 = match &sched.epsilon {
        None => ItemStatus::Skipped("no epsilon schedule given".into()),
        Some(eps) => first_failure(enumerable.iter().map(|&k| {
            let m = sched.m(k)? as u32;
            let e = eps.eps(k)?;
            let qs = taylor_box(n, m);
            for p in fourier_box(d, m + boxes.p_margin) {
                let idx_p: u32 = p.iter().map(|v| v.unsigned_abs()).sum();
                if idx_p <= m {
                    continue;
                }
                for q in &qs {
                    let idx = MultiIndex::new(&p, q);
                    let v = divisor(&idx, qd, None);
                    if divisor_vanishes(&v, qd) {
                        continue;
                    }
                    let inv = 1.0 / modulus(&v);
                    let bound = (e * idx_p as f64).exp();
                    if inv > bound * (1.0 + 1e-12) {
                        return Ok(Some((k, Some(idx), format!("|divisor|^-1 = {inv:.6} > e^(eps_k |P|) = {bound:.6}"))));
                    }
                }
            }
            Ok(None)
        }))?,
    };
    items.push(ItemReport {
        item: 4,
        description: "|P| > m_k, |Q| <= m_k: |divisor|^-1 <= e^(eps_k |P|)",
        status: item4,
        scope: format!(
            "k in {enumerable:?}, m_k < |P| <= m_k + {}",
            boxes.p_margin
        ),
    });

    let item5 = first_failure(enumerable.iter().map(|&k| {
        let m = sched.m(k)? as u32;
        let g = sched.g_k(k)?;
        let qs = taylor_box(n, m);
        for p in fourier_box(d, m) {
            for q in &qs {
                let idx = MultiIndex::new(&p, q);
                let v = divisor(&idx, qd, None);
                if divisor_vanishes(&v, qd) {
                    continue;
                }
                let inv = 1.0 / modulus(&v);
                if inv > g * (1.0 + 1e-12) {
                    return Ok(Some((k, Some(idx), format!("|divisor|^-1 = {inv:.6} > g(m_k) = {g:.6}"))));
                }
            }
        }
        Ok(None)
    }))?;
    items.push(ItemReport {
        item: 5,
        description: "|P| <= m_k, |Q| <= m_k: |divisor|^-1 <= g(m_k)",
        status: item5,
        scope: format!("k in {enumerable:?}"),
    });

    let item6 = match &sched.epsilon {
        None => ItemStatus::Skipped("no epsilon schedule given".into()),
        Some(eps) => first_failure((0..steps).map(|k| {
            let gap = sched.r(k)? - sched.r(k + 1)? - eps.eps(k)?;
            let g = sched.g_k(k)?;
            let e = 4 * d as i32 + 6;
            if gap <= 0.0 {
                return Ok(Some((k, None, format!("r_k - r_(k+1) - eps_k = {gap:.6} <= 0"))));
            }
            let lhs = 4f64.powi(e) * gap.powi(-e);
            Ok((lhs > g).then(|| (k, None, format!("4^(4d+6) gap^-(4d+6) = {lhs:.6e} > g(m_k) = {g:.6}"))))
        }))?,
    };
    items.push(ItemReport {
        item: 6,
        description: "4^(4d+6) (r_k - r_(k+1) - eps_k)^-(4d+6) <= g(m_k)",
        status: item6,
        scope: format!("k < {steps}"),
    });

    let item7 = first_failure((0..=steps).map(|k| {
        let r = sched.r(k)?;
        Ok((r <= 0.5).then(|| (k, None, format!("r_k = {r:.6} <= 1/2"))))
    }))?;
    items.push(ItemReport {
        item: 7,
        description: "r_k > 1/2",
        status: item7,
        scope: format!("k <= {steps}"),
    });

    Ok(AssumptionReport { items, brjuno })
}

/// The sequences `delta_k`, `zeta_k`, `eta_k` and the flags attached to them.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationParams {
    pub delta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub eta: Vec<f64>,
    /// `C''_S`.
    pub c_s2: f64,
    /// `D'' = 10 + 6n`.
    pub d2: u32,
    pub c_omega: f64,
    /// Partial Brjuno sum over the horizon.
    pub brjuno: BrjunoSum,
    /// `delta_inf` approximated by the horizon value.
    pub delta_inf: f64,
    /// `delta_inf / (8 (n+d) (1 + 2 C''_S (n+2) B))`.
    pub zeta0_bound: f64,
    pub zeta0_ok: bool,
    /// `eta_k <= 1/8` over the horizon.
    pub eta_ok: bool,
    /// `2 C''_S / g(m_k) < 1` over the horizon.
    pub zeta_decreasing: bool,
}

pub fn build_params<T: Real>(
    qd: &QuasilinearData<T>,
    sched: &BrjunoSchedule,
    delta0: f64,
    zeta0: f64,
    c_s2: f64,
) -> Result<IterationParams> {
    let (d, n) = qd.dims();
    let c_omega = qd.c_omega();
    let bound = 1f64.min(c_omega);
    if !(delta0 > 0.0 && delta0 <= bound) {
        return Err(Error::Delta0TooLarge { delta0, bound });
    }
    let h = sched.horizon;
    let expo = 17.0 + 10.0 * n as f64;
    let mut delta = vec![delta0];
    let mut zeta = vec![zeta0];
    let mut zeta_decreasing = true;
    for k in 0..h {
        let m = sched.m(k)? as f64;
        let g = sched.g_k(k)?;
        delta.push(delta[k] * g.powf(-expo / m));
        let ratio = 2.0 * c_s2 / g;
        zeta_decreasing &= ratio < 1.0;
        zeta.push(zeta[k] * ratio);
    }
    let eta: Vec<f64> = zeta
        .iter()
        .scan(0.0, |acc, z| {
            *acc += z;
            Some(*acc)
        })
        .collect();
    let brjuno = brjuno_sum(sched, h)?;
    let delta_inf = delta[h];
    let zeta0_bound =
        delta_inf / (8.0 * (n + d) as f64 * (1.0 + 2.0 * c_s2 * (n as f64 + 2.0) * brjuno.value));
    Ok(IterationParams {
        eta_ok: eta.iter().all(|&e| e <= 0.125),
        zeta0_ok: zeta0 < zeta0_bound,
        delta,
        zeta,
        eta,
        c_s2,
        d2: 10 + 6 * n as u32,
        c_omega,
        brjuno,
        delta_inf,
        zeta0_bound,
        zeta_decreasing,
    })
}

/// Intermediate radii of step `k`: `r = r_k > r1 > r2 > r3 > r4 = r_{k+1}`
/// and `delta = delta_k`, `delta1 = sqrt(delta2 delta)`,
/// `delta2 = delta g^{-D''/m_k}`, `delta3 = delta2^2 / delta1`,
/// `delta4 = delta_{k+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiiLadder {
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
}

impl RadiiLadder {
    pub fn from_parts(r: f64, r_next: f64, delta: f64, delta_next: f64, g: f64, m: u64, d2: u32) -> Self {
        let gap = r - r_next;
        let delta2 = delta * g.powf(-(d2 as f64) / m as f64);
        let delta1 = (delta2 * delta).sqrt();
        RadiiLadder {
            r,
            r1: r - 0.25 * gap,
            r2: r - 0.5 * gap,
            r3: r - 0.75 * gap,
            r4: r_next,
            delta,
            delta1,
            delta2,
            delta3: delta2 * delta2 / delta1,
            delta4: delta_next,
        }
    }
}

pub fn radii_ladder(k: usize, params: &IterationParams, sched: &BrjunoSchedule) -> Result<RadiiLadder> {
    if k + 1 >= params.delta.len() {
        return Err(Error::ScheduleExhausted(k + 1));
    }
    Ok(RadiiLadder::from_parts(
        sched.r(k)?,
        sched.r(k + 1)?,
        params.delta[k],
        params.delta[k + 1],
        sched.g_k(k)?,
        sched.m(k)?,
        params.d2,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn expr(s: &str) -> GFunction {
        GFunction::parse(s, &BTreeMap::new()).unwrap()
    }

    fn sched(g: GFunction, m: MSchedule, horizon: usize) -> BrjunoSchedule {
        BrjunoSchedule {
            g,
            m,
            epsilon: None,
            r: RSchedule::Values(vec![1.0; horizon + 2]),
            horizon,
        }
    }

    fn qd(omega: &[i64], lambda: &[i64]) -> QuasilinearData<BigRational> {
        QuasilinearData::new(
            omega.iter().map(|&w| BigRational::from_i64(w)).collect(),
            lambda.iter().map(|&l| crate::scalar::ratio(l, 1)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn expressions() {
        assert_eq!(expr("2*m^3").eval(2).unwrap(), 16.0);
        assert_eq!(expr("exp(m)").eval(1).unwrap(), std::f64::consts::E);
        assert_eq!(expr("-m + 3*(m + 1)/2").eval(3).unwrap(), 3.0);
        let params = BTreeMap::from([("C".to_string(), 2.0), ("tau".to_string(), 3.0)]);
        let g = GFunction::parse("C*m^tau", &params).unwrap();
        assert_eq!(g.eval(3).unwrap(), 54.0);
        assert!(GFunction::parse("2*q", &BTreeMap::new()).is_err());
        assert!(GFunction::parse("2*(m", &BTreeMap::new()).is_err());
        assert!(matches!(expr("m - 2").eval(1), Err(Error::NonPositiveG { .. })));
    }

    #[test]
    fn m_schedules() {
        assert_eq!(MSchedule::Doubling.m(5).unwrap(), 32);
        let s: Vec<u64> = (0..4).map(|k| MSchedule::Saturating.m(k).unwrap()).collect();
        assert_eq!(s, vec![1, 3, 7, 15]);
        assert_eq!(MSchedule::List(vec![1, 2]).m(2), Err(Error::ScheduleExhausted(2)));
    }

    #[test]
    fn brjuno_sums() {
        let s = sched(expr("1"), MSchedule::Doubling, 10);
        assert_eq!(brjuno_sum(&s, 10).unwrap().value, 0.0);

        let s = sched(expr("2*m^3"), MSchedule::Doubling, 40);
        let b = brjuno_sum(&s, 40).unwrap();
        // sum 2^-k = 1 and sum k 2^-k = 2
        let closed = 2f64.ln() + 2.0 * 3.0 * 2f64.ln();
        assert!((b.value - closed).abs() < 1e-9);
        assert!((closed - 4.852030).abs() < 1e-6);

        let s = sched(expr("m^3"), MSchedule::Doubling, 60);
        let closed = 6.0 * 2f64.ln();
        assert!((brjuno_sum(&s, 60).unwrap().value - closed).abs() < 1e-12);
        assert!((closed - 4.158883).abs() < 1e-6);
    }

    #[test]
    fn assumption_items() {
        let q = qd(&[1], &[1, -1]);
        let mut s = sched(expr("1"), MSchedule::Doubling, 8);
        s.epsilon = Some(EpsilonSchedule::Values(vec![0.0; 10]));
        let rep = check_assumption(&q, &s, &AssumptionBoxes::default()).unwrap();
        assert_eq!(rep.item(4).status, ItemStatus::Pass);
        assert_eq!(rep.item(5).status, ItemStatus::Pass);
        assert!(matches!(rep.item(3).status, ItemStatus::Fail { k: 0, .. }));

        let s = sched(expr("1"), MSchedule::List(vec![1, 4, 8, 16, 32]), 3);
        let rep = check_assumption(&q, &s, &AssumptionBoxes::default()).unwrap();
        assert!(matches!(rep.item(1).status, ItemStatus::Fail { k: 0, .. }));
        assert!(matches!(rep.item(4).status, ItemStatus::Skipped(_)));

        let mut s = sched(expr("1"), MSchedule::Doubling, 3);
        s.r = RSchedule::Values(vec![0.4; 10]);
        let rep = check_assumption(&q, &s, &AssumptionBoxes::default()).unwrap();
        assert!(matches!(rep.item(7).status, ItemStatus::Fail { k: 0, .. }));
    }

    #[test]
    fn params() {
        let q = qd(&[1], &[-1]);
        let s = sched(expr("2"), MSchedule::Doubling, 3);
        let p = build_params(&q, &s, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(p.delta[1], 2f64.powi(-27));
        assert!(p.zeta.iter().all(|&z| z == 0.0));
        assert!(p.eta_ok && p.zeta0_ok);

        let s = sched(expr("4"), MSchedule::Doubling, 6);
        let p = build_params(&q, &s, 0.5, 0.01, 1.0).unwrap();
        for k in 0..=6 {
            assert!((p.zeta[k] - 0.01 * 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
        assert!((p.eta[6] - 0.02).abs() < 0.01 * 0.5f64.powi(6) + 1e-15);

        assert!(matches!(
            build_params(&q, &s, 1.5, 0.0, 1.0),
            Err(Error::Delta0TooLarge { .. })
        ));
    }

    #[test]
    fn ladders() {
        let l = RadiiLadder::from_parts(1.0, 0.6, 1.0, 0.1, 1.0, 1, 16);
        assert!((l.r1 - 0.9).abs() < 1e-15 && (l.r2 - 0.8).abs() < 1e-15);
        assert!((l.r3 - 0.7).abs() < 1e-15 && l.r4 == 0.6);

        let m = 3;
        let d2 = 16;
        let l = RadiiLadder::from_parts(1.0, 0.6, 1.0, 1e-30, (m as f64).exp(), m, d2);
        let dd = d2 as f64;
        assert!((l.delta2 - (-dd).exp()).abs() < 1e-20);
        assert!((l.delta1 - (-dd / 2.0).exp()).abs() < 1e-15);
        assert!((l.delta3.ln() + 1.5 * dd).abs() < 1e-12);
    }
}
