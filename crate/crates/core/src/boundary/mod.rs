//! Leading-order boundary determination: boundary normal charts, oscillatory traces
//! concentrating at a boundary point, and recovery of X there from the probe integral.

mod chart;
mod probe;

pub use chart::{build_boundary_chart, BoundaryChart, GeodesicState};
pub use probe::{
    oscillatory_trace, probe_integral, probe_limit, probe_norm_scaling, recover_boundary_field, BoundaryRecovery, ChartField,
    DirectionFit, Extrapolation, NormScaling, OscillatoryTrace, ProbeProfile, MAX_LAMBDA, RICHARDSON_TOL,
};
