//! Gaussian beam quasimodes: phase Hessian, amplitudes of both types, pair
//! normalization and assembly over the cover.

mod amplitude;
pub mod cauchy;
mod quasimode;
mod riccati;

pub use amplitude::{
    normalize_pair, pair_constant, solve_amplitude_type1, solve_amplitude_type2, solve_amplitude_w, transport_residual,
    AmplitudeKind, AmplitudeProfile,
};
pub use quasimode::{assemble_beam_v, assemble_beam_w, GaussianBeam};
pub use riccati::{min_imag_eig, solve_riccati, RiccatiSolution};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::geodesic::{build_cover, build_fermi_chart, Cover, FermiChart, GeodesicPath};
use crate::manifold::CtaManifold;
use crate::numerics::cheb::ChebSeries;

/// Riccati step; RK4 error at this step is far below the 1e−8 budget for the catalog.
pub const RICCATI_DT: f64 = 0.005;

/// Everything a beam needs that does not depend on h: manifold, Fermi chart, cover and H(t).
#[derive(Debug, Clone)]
pub struct BeamGeometry {
    pub manifold: CtaManifold,
    pub chart: FermiChart,
    pub cover: Cover,
    pub riccati: RiccatiSolution,
    pub self_intersecting: bool,
    /// Chebyshev fits of γ and its first four derivatives, per coordinate.
    axis_fit: Vec<[ChebSeries; 5]>,
}

impl BeamGeometry {
    /// Builds the chart, cover and Riccati solution along `path` with H(0) = `h0`.
    pub fn new(manifold: &CtaManifold, path: &GeodesicPath, delta_prime: f64, h0: &DMatrix<Complex64>) -> Result<Self> {
        let chart = build_fermi_chart(path, delta_prime)?;
        let cover = build_cover(path, delta_prime)?;
        let (a, b) = (-2.0 * chart.eps, chart.length + 2.0 * chart.eps);
        let source = |t: f64| chart.riccati_source(t);
        let riccati = solve_riccati(&source, h0, 0.0, (a, b), RICCATI_DT)?;
        let nodes = 257;
        let ts: Vec<f64> = (0..nodes)
            .map(|k| 0.5 * (a + b) - 0.5 * (b - a) * (std::f64::consts::PI * k as f64 / (nodes - 1) as f64).cos())
            .collect();
        let pts: Vec<Vec<f64>> = ts.iter().map(|&t| chart.axis(t).0).collect();
        let axis_fit = (0..chart.dim())
            .map(|d| {
                let vals: Vec<Complex64> = pts.iter().map(|p| Complex64::new(p[d], 0.0)).collect();
                let s = ChebSeries::fit_adaptive(a, b, &ts, &vals, 1e-14, 200).0;
                let d1 = s.derivative();
                let d2 = d1.derivative();
                let d3 = d2.derivative();
                let d4 = d3.derivative();
                [s, d1, d2, d3, d4]
            })
            .collect();
        Ok(BeamGeometry {
            manifold: manifold.clone(),
            chart,
            cover,
            riccati,
            self_intersecting: !path.self_intersections.is_empty(),
            axis_fit,
        })
    }

    /// H(0) = i·Identity.
    pub fn isotropic_h0(k: usize) -> DMatrix<Complex64> {
        DMatrix::from_diagonal_element(k, k, Complex64::new(0.0, 1.0))
    }

    pub fn n(&self) -> usize {
        self.manifold.n()
    }

    /// Parameter range [−2ε, L + 2ε] on which the beam is defined.
    pub fn t_range(&self) -> (f64, f64) {
        (-2.0 * self.chart.eps, self.chart.length + 2.0 * self.chart.eps)
    }

    /// γ(t) from the cached Chebyshev fit of the axis.
    pub fn axis_point(&self, t: f64) -> Vec<f64> {
        self.axis_derivative(t, 0)
    }

    /// d^k γ/dt^k for k ≤ 4.
    pub fn axis_derivative(&self, t: f64, k: usize) -> Vec<f64> {
        self.axis_fit.iter().map(|s| s[k].eval(t).re).collect()
    }

    /// c(x₁, γ(t)).
    pub fn c_axis(&self, x1: f64, t: f64) -> f64 {
        if self.manifold.conformal.transversally_constant() {
            return self.manifold.conformal.value(x1, &[]);
        }
        self.manifold.c(x1, &self.axis_point(t))
    }

    /// c(x₁, Φ(t, y)).
    pub fn c_at(&self, x1: f64, t: f64, y: &[f64]) -> f64 {
        if self.manifold.conformal.transversally_constant() {
            return self.manifold.conformal.value(x1, &[]);
        }
        if y.iter().all(|v| *v == 0.0) {
            return self.c_axis(x1, t);
        }
        self.manifold.c(x1, &self.chart.point(t, y))
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use std::sync::Arc;

    use super::BeamGeometry;
    use crate::geodesic::{trace_geodesic, BundlePoint};
    use crate::manifold::{ConformalFactor, CtaManifold, TransversalMetric, TransversalModel};

    /// Unit-disk diameter starting at (−1, 0), δ′ = 8.
    pub fn flat_chord_geometry(c: ConformalFactor) -> Arc<BeamGeometry> {
        let m0 = TransversalMetric::disk();
        let m = CtaManifold::new("flat", [-1.0, 1.0], m0.clone(), c).unwrap();
        let bp = BundlePoint::on_circle(&m0, std::f64::consts::PI, 0.0).unwrap();
        let path = trace_geodesic(&m0, &bp, 1e-3, 10.0).unwrap();
        Arc::new(BeamGeometry::new(&m, &path, 8.0, &BeamGeometry::isotropic_h0(1)).unwrap())
    }

    /// Off-center chord of the perturbed disk with a radial conformal factor.
    pub fn chord_geometry() -> Arc<BeamGeometry> {
        let m0 = TransversalMetric::new(2, 1.0, TransversalModel::Perturbed { kappa: 0.2 });
        let m = CtaManifold::new("perturbed", [-1.0, 1.0], m0.clone(), ConformalFactor::Radial { kappa: 0.3 }).unwrap();
        let bp = BundlePoint::on_circle(&m0, 2.5, 0.4).unwrap();
        let path = trace_geodesic(&m0, &bp, 1e-3, 10.0).unwrap();
        Arc::new(BeamGeometry::new(&m, &path, 0.3, &BeamGeometry::isotropic_h0(1)).unwrap())
    }
}
