//! Multilinear algebra over Hermitian and quaternionic model spaces.

pub mod checks;
pub mod forms;
pub mod model;

pub use forms::KForm;
pub use model::{endo_of, form_of, HermitianModel, Mat};
