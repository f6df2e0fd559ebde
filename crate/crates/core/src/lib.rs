//! Normal forms of analytic vector fields near an invariant torus
//! `T^d x {0}` in `T^d x C^n`, computed at finite truncation order.
//!
//! The algebra is generic over the real backend (see [`scalar::Real`]);
//! the aliases below fix the two backends in common use.

pub mod error;
pub mod field;
pub mod homological;
pub mod iteration;
pub mod index;
pub mod normal_form;
pub mod resonance;
pub mod scalar;
pub mod schedule;
pub mod series;

pub use error::{Error, Result};
pub use index::MultiIndex;
pub use scalar::{Coeff, Real, Tolerances};
pub use field::{pushforward_defect, pushforward_residual, Diffeo, QuasilinearData, VectorField};
pub use series::{NormParams, Series, Var};

pub use num_rational::BigRational;

pub type ExactSeries = Series<BigRational>;
pub type FloatSeries = Series<f64>;
pub type ExactField = VectorField<BigRational>;
pub type FloatField = VectorField<f64>;
pub type ExactDiffeo = Diffeo<BigRational>;
pub type FloatDiffeo = Diffeo<f64>;
pub type ExactQuasilinear = QuasilinearData<BigRational>;
pub type FloatQuasilinear = QuasilinearData<f64>;
