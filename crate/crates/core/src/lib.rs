//! Gaussian beam quasimodes for the conjugated biharmonic operator on
//! conformally transversally anisotropic manifolds, with the supporting
//! geodesic, ray-transform and boundary-probe machinery.

pub mod beam;
pub mod boundary;
pub mod error;
pub mod experiment;
pub mod geodesic;
pub mod manifold;
pub mod numerics;
pub mod ray;
pub mod residual;

pub use error::{Error, Result};
pub use num_complex::Complex64;
