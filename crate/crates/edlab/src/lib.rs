//! Numerical verification laboratory for second-order Einstein deformations.

pub mod chart_calc;
pub mod error;
pub mod grassmann_model;
pub mod integrate;
pub mod obstruct;
pub mod lie_core;
pub mod report;
pub mod scalar;
pub mod suites;
pub mod tensor_alg;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision forms.
pub type KForm64 = tensor_alg::KForm<f64>;
/// Double-precision Hermitian model.
pub type HermitianModel64 = tensor_alg::HermitianModel<f64>;
/// Grassmannian model at the base point.
pub type GrassmannModel = grassmann_model::GrassmannAlgebraModel;
/// Double-precision jet.
pub type Jet64 = chart_calc::Jet<f64>;
