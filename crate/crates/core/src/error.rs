use thiserror::Error;

use crate::index::MultiIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected (d, n) = {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("truncation cap mismatch: {0} vs {1}")]
    CapMismatch(u32, u32),

    #[error("order {order} out of range (cap {cap})")]
    OrderOutOfRange { order: u32, cap: u32 },

    #[error("series is not a unit: its order-0 part must be exactly 1")]
    NotUnit,

    #[error("Y-component {component} has a term constant in Y; vector fields must have quasi-order >= 0")]
    NegativeQuasiOrder { component: usize },

    #[error("diffeomorphism is not tangent to identity")]
    NotTangentToIdentity,

    #[error("quasilinear part of the field differs from S")]
    QuasilinearMismatch,

    #[error("perturbation must have quasi-order >= {required}, found {found}")]
    PerturbationOrder { required: u32, found: u32 },

    #[error("resonant term at {index:?} in component {component} where a non-resonant field is required")]
    ResonantTerm { component: usize, index: MultiIndex },

    #[error("zero divisor at {index:?} in component {component}")]
    ZeroDivisor { component: usize, index: MultiIndex },

    #[error("A-condition fails: normal form is not proportional to S through order {order}")]
    ACondition { order: u32 },

    #[error("A-condition unsupported: every frequency omega_j vanishes")]
    AllFrequenciesZero,

    #[error("no non-resonant index with |P| <= {m} and |Q| <= {m}")]
    NoNonResonantIndex { m: u32 },

    #[error("g(m) = {value} is not positive at m = {m}")]
    NonPositiveG { m: u64, value: f64 },

    #[error("schedule has no entry for step {0}")]
    ScheduleExhausted(usize),

    #[error("delta0 = {delta0} must satisfy delta0 <= min(1, C_omega) = {bound}")]
    Delta0TooLarge { delta0: f64, bound: f64 },

    #[error("invalid g expression {0:?}")]
    BadGExpression(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
