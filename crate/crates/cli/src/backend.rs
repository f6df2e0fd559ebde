//! Conversion of exact input to a backend and of backend values to report text.

use serde_json::Value;
use tnf_core::{BigRational, Coeff, Real};

use crate::input::rational_string;

pub trait Scalar: Real {
    fn from_rational(q: &BigRational) -> Self;

    /// Exact backends print `"p/q"` strings, floats print numbers.
    fn to_json(&self) -> Value;

    fn to_text(&self) -> String;

    fn from_rational_coeff(c: &Coeff<BigRational>) -> Coeff<Self> {
        Coeff::new(Self::from_rational(&c.re), Self::from_rational(&c.im))
    }
}

impl Scalar for BigRational {
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn to_json(&self) -> Value {
        Value::String(rational_string(self))
    }

    fn to_text(&self) -> String {
        rational_string(self)
    }
}

impl Scalar for f64 {
    fn from_rational(q: &BigRational) -> Self {
        Real::to_f64(q)
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self).map_or(Value::Null, Value::Number)
    }

    fn to_text(&self) -> String {
        format!("{self:e}")
    }
}

pub fn coeff_json<T: Scalar>(c: &Coeff<T>) -> Value {
    Value::Array(vec![c.re.to_json(), c.im.to_json()])
}

pub fn coeff_text<T: Scalar>(c: &Coeff<T>) -> String {
    format!("({}, {})", c.re.to_text(), c.im.to_text())
}
