//! The JSON system description shared by all commands.
//!
//! ```json
//! {
//!   "d": 1, "n": 1,
//!   "omega": ["1"],
//!   "lambda": [["-1", "0"]],
//!   "terms": [{"component": 2, "P": [1], "Q": [2], "coeff": ["1/10", 0]}],
//!   "cap": 4,
//!   "backend": "exact",
//!   "norm": {"r0": 1.0, "delta0": 0.5}
//! }
//! ```
//!
//! Numbers are JSON numbers, decimal strings or `"p/q"` strings, and are
//! kept as exact rationals until a backend is chosen.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{Map, Value};
use thiserror::Error;
use tnf_core::{BigRational, Coeff, MultiIndex, NormParams, QuasilinearData, VectorField};

use crate::backend::Scalar;

/// A rejected input, located by its JSON path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl InputError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        InputError {
            path: path.into(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, InputError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

/// One monomial `coeff e^{i<P,X>} Y^Q d/dZ_component`, `component` 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub component: usize,
    pub index: MultiIndex,
    pub coeff: Coeff<BigRational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub d: usize,
    pub n: usize,
    pub omega: Vec<BigRational>,
    pub lambda: Vec<Coeff<BigRational>>,
    pub terms: Vec<Term>,
    pub cap: u32,
    pub backend: Backend,
    pub norm: NormParams,
}

impl SystemSpec {
    pub fn quasilinear<T: Scalar>(&self) -> QuasilinearData<T> {
        QuasilinearData::new(
            self.omega.iter().map(T::from_rational).collect(),
            self.lambda.iter().map(T::from_rational_coeff).collect(),
        )
        .expect("dimensions validated at parse time")
    }

    /// The perturbation `R = F - S`.
    pub fn perturbation<T: Scalar>(&self) -> VectorField<T> {
        terms_to_field(self.d, self.n, self.cap, &self.terms)
    }

    /// `F = S + R`.
    pub fn field<T: Scalar>(&self) -> VectorField<T> {
        &self.quasilinear::<T>().s_field(self.cap) + &self.perturbation()
    }
}

pub fn terms_to_field<T: Scalar>(d: usize, n: usize, cap: u32, terms: &[Term]) -> VectorField<T> {
    let mut f = VectorField::zero(d, n, cap);
    for t in terms {
        let m = VectorField::monomial(d, n, cap, t.component, t.index.clone(), T::from_rational_coeff(&t.coeff))
            .expect("terms validated at parse time");
        f += &m;
    }
    f
}

/// Parses `"p/q"`, integers and decimals with an optional exponent, exactly.
pub fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    let s = s.trim();
    let bad = || format!("`{s}` is not a rational number");
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(format!("`{s}` has a zero denominator"));
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all = format!("{int}{frac}");
    let mut value = BigRational::from_integer(BigInt::from_str(&all).map_err(|_| bad())?);
    let scale = exp - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= pow;
    } else {
        value /= pow;
    }
    Ok(if neg { -value } else { value })
}

fn number(v: &Value, path: &str) -> Result<BigRational> {
    match v {
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(BigRational::from_integer(BigInt::from(i)))
            } else if let Some(u) = num.as_u64() {
                Ok(BigRational::from_integer(BigInt::from(u)))
            } else {
                // shortest round-trip decimal, so 0.1 means 1/10
                let x = num.as_f64().unwrap_or(f64::NAN);
                parse_rational(&format!("{x:e}")).map_err(|m| InputError::new(path, m))
            }
        }
        Value::String(s) => parse_rational(s).map_err(|m| InputError::new(path, m)),
        _ => Err(InputError::new(path, "expected a number or a \"p/q\" string")),
    }
}

fn complex(v: &Value, path: &str) -> Result<Coeff<BigRational>> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Coeff::new(number(re, &format!("{path}[0]"))?, number(im, &format!("{path}[1]"))?)),
        _ => Err(InputError::new(path, "expected a complex number [re, im]")),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| InputError::new(path, format!("missing field `{key}`")))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn unsigned(v: &Value, path: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| InputError::new(path, "expected a non-negative integer"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| InputError::new(path, "expected an array"))
}

fn positive(v: &Value, path: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(InputError::new(path, "expected a positive number")),
    }
}

/// Parses a term list such as the `terms` field, enforcing quasi-order at
/// least 1: `|Q| >= 1` in X-components and `|Q| >= 2` in Y-components.
pub fn parse_terms(v: &Value, path: &str, d: usize, n: usize) -> Result<Vec<Term>> {
    let mut out = Vec::new();
    for (i, t) in array(v, path)?.iter().enumerate() {
        let tp = format!("{path}[{i}]");
        let obj = t
            .as_object()
            .ok_or_else(|| InputError::new(&tp, "expected an object"))?;
        let cp = join(&tp, "component");
        let component = unsigned(field(obj, "component", &tp)?, &cp)? as usize;
        if component == 0 || component > d + n {
            return Err(InputError::new(cp, format!("component must lie in 1..={}", d + n)));
        }
        let pp = join(&tp, "P");
        let p = array(field(obj, "P", &tp)?, &pp)?;
        if p.len() != d {
            return Err(InputError::new(pp, format!("expected {d} Fourier exponents, got {}", p.len())));
        }
        let p = p
            .iter()
            .enumerate()
            .map(|(j, x)| {
                x.as_i64()
                    .and_then(|x| i32::try_from(x).ok())
                    .ok_or_else(|| InputError::new(format!("{pp}[{j}]"), "expected an integer"))
            })
            .collect::<Result<Vec<_>>>()?;
        let qp = join(&tp, "Q");
        let q = array(field(obj, "Q", &tp)?, &qp)?;
        if q.len() != n {
            return Err(InputError::new(qp, format!("expected {n} Taylor exponents, got {}", q.len())));
        }
        let q = q
            .iter()
            .enumerate()
            .map(|(j, x)| {
                x.as_u64()
                    .and_then(|x| u32::try_from(x).ok())
                    .ok_or_else(|| InputError::new(format!("{qp}[{j}]"), "expected a non-negative integer"))
            })
            .collect::<Result<Vec<_>>>()?;
        let index = MultiIndex::new(&p, &q);
        let component = component - 1;
        if component < d && index.q_norm() < 1 {
            return Err(InputError::new(
                qp,
                "X-components of the perturbation must have order 1 in Y (|Q| >= 1)",
            ));
        }
        if component >= d && index.q_norm() < 2 {
            return Err(InputError::new(
                qp,
                "Y-components of the perturbation must have order 2 in Y (|Q| >= 2)",
            ));
        }
        let coeff = complex(field(obj, "coeff", &tp)?, &join(&tp, "coeff"))?;
        out.push(Term {
            component,
            index,
            coeff,
        });
    }
    Ok(out)
}

pub fn parse_backend(v: &Value, path: &str) -> Result<Backend> {
    match v.as_str() {
        Some("exact") => Ok(Backend::Exact),
        Some("float") => Ok(Backend::Float),
        _ => Err(InputError::new(path, "expected \"exact\" or \"float\"")),
    }
}

pub fn parse_system(text: &str) -> Result<SystemSpec> {
    let root: Value = serde_json::from_str(text).map_err(|e| InputError::new("$", format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| InputError::new("$", "expected an object"))?;
    let d = unsigned(field(obj, "d", "$")?, "d")? as usize;
    let n = unsigned(field(obj, "n", "$")?, "n")? as usize;
    if d == 0 {
        return Err(InputError::new("d", "need at least one angle (d >= 1)"));
    }
    if n == 0 {
        return Err(InputError::new("n", "need at least one transverse variable (n >= 1)"));
    }
    let omega = array(field(obj, "omega", "$")?, "omega")?;
    if omega.len() != d {
        return Err(InputError::new("omega", format!("expected {d} frequencies, got {}", omega.len())));
    }
    let omega = omega
        .iter()
        .enumerate()
        .map(|(i, v)| number(v, &format!("omega[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let lambda = array(field(obj, "lambda", "$")?, "lambda")?;
    if lambda.len() != n {
        return Err(InputError::new("lambda", format!("expected {n} eigenvalues, got {}", lambda.len())));
    }
    let lambda = lambda
        .iter()
        .enumerate()
        .map(|(i, v)| complex(v, &format!("lambda[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let cap = unsigned(field(obj, "cap", "$")?, "cap")?;
    let cap = u32::try_from(cap).map_err(|_| InputError::new("cap", "cap is too large"))?;
    let terms = match obj.get("terms") {
        Some(v) => parse_terms(v, "terms", d, n)?,
        None => Vec::new(),
    };
    // The cap bounds the quasi-degree: |Q| for X-components, |Q| - 1 for Y-components.
    for (i, t) in terms.iter().enumerate() {
        let limit = if t.component < d { cap } else { cap.saturating_add(1) };
        if t.index.q_norm() > limit {
            return Err(InputError::new(
                format!("terms[{i}].Q"),
                format!("|Q| = {} exceeds {limit} allowed by cap {cap}", t.index.q_norm()),
            ));
        }
    }
    let backend = match obj.get("backend") {
        Some(v) => parse_backend(v, "backend")?,
        None => Backend::Exact,
    };
    let norm = match obj.get("norm") {
        Some(v) => {
            let no = v.as_object().ok_or_else(|| InputError::new("norm", "expected an object"))?;
            let r0 = positive(field(no, "r0", "norm")?, "norm.r0")?;
            let delta0 = positive(field(no, "delta0", "norm")?, "norm.delta0")?;
            NormParams::new(r0, delta0).map_err(|e| InputError::new("norm", e.to_string()))?
        }
        None => NormParams::new(1.0, 0.5).expect("positive defaults"),
    };
    Ok(SystemSpec {
        d,
        n,
        omega,
        lambda,
        terms,
        cap,
        backend,
        norm,
    })
}

/// Formats an exact rational as `"p"` or `"p/q"`.
pub fn rational_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else if q.is_negative() {
        format!("-{}/{}", q.numer().abs(), q.denom())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    const MINIMAL: &str = r#"{"d": 1, "n": 1, "omega": [1], "lambda": [[-1, 0]],
        "terms": [{"component": 2, "P": [1], "Q": [2], "coeff": ["1/10", 0]}], "cap": 2}"#;

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rational("3/6"), Ok(q(1, 2)));
        assert_eq!(parse_rational("-0.125"), Ok(q(-1, 8)));
        assert_eq!(parse_rational("1e-3"), Ok(q(1, 1000)));
        assert_eq!(parse_rational("2.5E1"), Ok(q(25, 1)));
        assert_eq!(parse_rational("7"), Ok(q(7, 1)));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
        assert_eq!(rational_string(&q(-3, 4)), "-3/4");
    }

    #[test]
    fn json_decimals_are_read_as_decimals() {
        assert_eq!(number(&serde_json::json!(0.1), "x"), Ok(q(1, 10)));
    }

    #[test]
    fn minimal_system_is_accepted() {
        let s = parse_system(MINIMAL).unwrap();
        assert_eq!((s.d, s.n, s.cap), (1, 1, 2));
        assert_eq!(s.terms[0].coeff, Coeff::new(q(1, 10), q(0, 1)));
        assert_eq!(s.backend, Backend::Exact);
    }

    #[test]
    fn order_violations_are_rejected() {
        let x0 = MINIMAL.replace(r#""component": 2, "P": [1], "Q": [2]"#, r#""component": 1, "P": [1], "Q": [0]"#);
        let err = parse_system(&x0).unwrap_err();
        assert_eq!(err.path, "terms[0].Q");
        assert!(err.message.contains("order 1"));
        let y1 = MINIMAL.replace(r#""Q": [2]"#, r#""Q": [1]"#);
        assert!(parse_system(&y1).unwrap_err().message.contains("order 2"));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let bad = MINIMAL.replace(r#"[[-1, 0]]"#, r#"[[-1, 0], [1, 0]]"#);
        assert_eq!(parse_system(&bad).unwrap_err().path, "lambda");
        let ok = MINIMAL.replace(r#""cap": 2"#, r#""cap": 1"#);
        assert!(parse_system(&ok).is_ok());
        let bad = MINIMAL.replace(r#""Q": [2]"#, r#""Q": [4]"#);
        assert_eq!(parse_system(&bad).unwrap_err().path, "terms[0].Q");
        let bad = MINIMAL.replace(r#""coeff": ["1/10", 0]"#, r#""coeff": ["x", 0]"#);
        assert_eq!(parse_system(&bad).unwrap_err().path, "terms[0].coeff[0]");
    }
}
