//! Geodesic X-ray transform on M₀, attenuated moments of Fourier profiles in x₁,
//! potentials of closed fields, and a discrete injectivity probe.

pub mod fields;
pub mod line;
mod moments;
mod probe;
pub mod spline;

pub use line::{fan_beam, random_fan, FormOnM0, RayTracer, ScalarOnM0, TransformSample};
pub use moments::{
    fourier_profiles, moment_integral, moment_with_profiles, recover_potential, FieldOnStrip, FourierProfiles, Potential,
    VectorFieldFn, NOT_CLOSED_TOL, ZERO_MEAN_TOL,
};
pub use probe::{injectivity_probe, SpectrumReport, SplineBasis, KERNEL_TOL};
