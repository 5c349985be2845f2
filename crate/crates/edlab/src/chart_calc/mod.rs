//! Coordinate-chart Riemannian calculus with exact jet differentiation.
//!
//! Metrics and fields are evaluated on truncated Taylor jets, so every
//! derivative (in space and in the deformation parameter `t`) is exact up to
//! rounding. Operators act on coordinate tensors at one point; torus
//! integrals use exact uniform quadrature of band-limited fields.

pub mod checks;
pub mod fields;
pub mod fixtures;
pub mod geometry;
pub mod jet;
pub mod quadrature;
pub mod tensor;

pub use checks::{
    chart_suite, curvature_suite, gauge_check, identity_checks_integrated, identity_checks_pointwise,
    kahler_type_check, koiso_check, operator_checks, operator_suite, tjet_fd_check, variation_first,
    variation_second, weitzenboeck_check, ChartOptions, ChartTolerances, CurvatureData, IdentityFields,
    KoisoResult, OperatorData, OperatorFields, SecondVariation,
};
pub use fields::{Basis, FieldKind, FieldSpec, FourierTerm, PolyTerm, ScalarSpec};
pub use fixtures::{ChartMetric, Domain, Fixture};
pub use geometry::PointGeometry;
pub use jet::{Jet, JetSpace};
pub use quadrature::GridQuadrature;
pub use tensor::{Slot, Tensor};
