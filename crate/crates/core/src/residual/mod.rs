//! Numerical measurements of the quasimode estimates: conjugated biharmonic residual,
//! semiclassical norms, eikonal and transport residuals, concentration limits.

mod concentration;
mod conjugated;
mod eikonal;
pub mod fermi_ops;
mod grid;
pub mod jet;
mod norms;

pub use crate::beam::transport_residual;
pub use crate::numerics::fit::{scaling_slope, ScalingReport};
pub use conjugated::{
    conjugated_residual, cross_checked_residual, direct_residual_at, eikonal_value, expansion_terms, ResidualField,
    ResidualMode, DIRECT_STEP_FRACTION, MODE_MISMATCH_TOL,
};
pub use grid::{GridOptions, TubeGrid, TubeNode, X1Nodes, TAIL_EXPONENT};
pub use concentration::{
    axis_integral, concentration_gradient, concentration_scalar, concentration_vector, gradient_rhs, scalar_rhs,
    ConcentrationReport, ScalarField, VectorField, BOUNDARY_TOL,
};
pub use eikonal::eikonal_residual;
pub use norms::{coordinate_gradient, gradient_norm_sqr, h1scl_norm, l2_norm, GRADIENT_STEP_FRACTION};
