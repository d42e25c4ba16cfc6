//! Concentration of products v_s·w̄_s on the geodesic as h → 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{GridOptions, TubeGrid, X1Nodes};
use super::norms::{coordinate_gradient, GRADIENT_STEP_FRACTION};
use crate::beam::{AmplitudeKind, GaussianBeam};
use crate::error::{Error, Result};
use crate::numerics::quad::composite_gauss;

/// Boundary tolerance for test functions in the gradient limit.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Step for differences of test functions.
const PSI_STEP: f64 = 1e-4;
const AXIS_PANELS: usize = 64;

/// Scalar test function ψ(x₁, x′).
pub type ScalarField<'a> = &'a (dyn Fn(f64, &[f64]) -> f64 + Sync);
/// Vector field X(x₁, x′) = (X¹, X′) in product coordinates.
pub type VectorField<'a> = &'a (dyn Fn(f64, &[f64]) -> [f64; 3] + Sync);

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConcentrationReport {
    pub h: Vec<f64>,
    pub lhs: Vec<Complex64>,
    pub rhs: Complex64,
    /// |LHS − RHS|, relative to |RHS| unless RHS vanishes.
    pub errors: Vec<f64>,
    pub relative: bool,
}

impl ConcentrationReport {
    fn new(h: Vec<f64>, lhs: Vec<Complex64>, rhs: Complex64) -> Self {
        let relative = rhs.norm() > 1e-12;
        let errors = lhs.iter().map(|l| (l - rhs).norm() / if relative { rhs.norm() } else { 1.0 }).collect();
        ConcentrationReport { h, lhs, rhs, errors, relative }
    }

    pub fn monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn final_error(&self) -> f64 {
        *self.errors.last().unwrap_or(&f64::NAN)
    }
}

fn check_pair(v: &GaussianBeam, w: &GaussianBeam) -> Result<()> {
    if v.n() != 3 {
        return Err(Error::InvalidInput("concentration limits are implemented for n = 3".into()));
    }
    if w.kind() != AmplitudeKind::WSide || !std::sync::Arc::ptr_eq(&v.geometry, &w.geometry) || v.h != w.h {
        return Err(Error::InvalidInput("v and w must share geometry and h, with w built from w-side amplitudes".into()));
    }
    Ok(())
}

/// ∫₀^L f(t) dt by composite Gauss.
pub fn axis_integral(l: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let (ts, ws) = composite_gauss(0.0, l, AXIS_PANELS, 8);
    ts.iter().zip(&ws).map(|(&t, &w)| f(t) * w).sum()
}

/// ∫₀^L e^{−2λt}c(x₁′, γ(t))^{1−n/2}ψ(γ(t)) dt.
pub fn scalar_rhs(v: &GaussianBeam, psi: ScalarField, x1p: f64) -> Complex64 {
    let geo = &v.geometry;
    let p = 1.0 - geo.n() as f64 / 2.0;
    axis_integral(geo.chart.length, |t| {
        let x = geo.axis_point(t);
        Complex64::new((-2.0 * v.lambda * t).exp() * geo.manifold.c(x1p, &x).powf(p) * psi(x1p, &x), 0.0)
    })
}

fn slice_lhs(
    v: &GaussianBeam,
    x1p: f64,
    integrand: &(dyn Fn(&super::grid::TubeNode, &[f64]) -> Complex64 + Sync),
) -> Result<Complex64> {
    let grid = TubeGrid::for_beam(v, &GridOptions::slice(x1p))?;
    let chart = &v.geometry.chart;
    Ok(grid
        .nodes
        .par_iter()
        .map(|n| {
            let x = chart.point(n.x[1], &[n.x[2]]);
            integrand(n, &x) * n.weight
        })
        .sum())
}

/// LHS = ∫_{M₀} v_s w̄_s ψ dV_{g₀} at x₁ = x₁′ for each beam pair; RHS along γ.
pub fn concentration_scalar(
    pairs: &[(GaussianBeam, GaussianBeam)],
    psi: ScalarField,
    x1p: f64,
) -> Result<ConcentrationReport> {
    let first = pairs.first().ok_or_else(|| Error::InvalidInput("no beam pairs".into()))?;
    let mut lhs = Vec::with_capacity(pairs.len());
    for (v, w) in pairs {
        check_pair(v, w)?;
        let integrand = |n: &super::grid::TubeNode, x: &[f64]| {
            v.eval(n.x[0], n.x[1], &[n.x[2]]) * w.eval(n.x[0], n.x[1], &[n.x[2]]).conj() * psi(x1p, x)
        };
        lhs.push(slice_lhs(v, x1p, &integrand)?);
    }
    Ok(ConcentrationReport::new(pairs.iter().map(|p| p.0.h).collect(), lhs, scalar_rhs(&first.0, psi, x1p)))
}

/// Components of an ambient tangent vector X′ in the Fermi frame (∂_t, ∂_y) at (t, y).
fn fermi_components(v: &GaussianBeam, t: f64, y: f64, xp: [f64; 2]) -> [f64; 2] {
    let chart = &v.geometry.chart;
    let d = 1e-5;
    let dt: Vec<f64> = chart.point(t + d, &[y]).iter().zip(chart.point(t - d, &[y])).map(|(a, b)| (a - b) / (2.0 * d)).collect();
    let dy: Vec<f64> = chart.point(t, &[y + d]).iter().zip(chart.point(t, &[y - d])).map(|(a, b)| (a - b) / (2.0 * d)).collect();
    let det = dt[0] * dy[1] - dt[1] * dy[0];
    [(dy[1] * xp[0] - dy[0] * xp[1]) / det, (dt[0] * xp[1] - dt[1] * xp[0]) / det]
}

/// X_t = g₀(X′, γ̇), the coordinate t-component of X on the axis.
fn axis_t_component(v: &GaussianBeam, x1: f64, t: f64, field: VectorField) -> f64 {
    let geo = &v.geometry;
    let (x, vel) = geo.chart.axis(t);
    let xv = field(x1, &x);
    geo.manifold.transversal.inner(&x, &xv[1..], &vel)
}

/// LHS = h∫_{M₀} X(v_s) w̄_s ψ dV_{g₀} at x₁′; RHS = i∫₀^L X_t e^{−2λt}c^{1−n/2}ψ dt.
pub fn concentration_vector(
    pairs: &[(GaussianBeam, GaussianBeam)],
    field: VectorField,
    psi: ScalarField,
    x1p: f64,
) -> Result<ConcentrationReport> {
    let first = pairs.first().ok_or_else(|| Error::InvalidInput("no beam pairs".into()))?;
    let mut lhs = Vec::with_capacity(pairs.len());
    for (v, w) in pairs {
        check_pair(v, w)?;
        let beam = |q: [f64; 3]| v.eval(q[0], q[1], &[q[2]]);
        let integrand = |n: &super::grid::TubeNode, x: &[f64]| {
            let xv = field(x1p, x);
            let [ct, cy] = fermi_components(v, n.x[1], n.x[2], [xv[1], xv[2]]);
            let g = coordinate_gradient(&beam, n.x, v.h * GRADIENT_STEP_FRACTION);
            let xv_of_v = g[0] * xv[0] + g[1] * ct + g[2] * cy;
            xv_of_v * v.h * w.eval(n.x[0], n.x[1], &[n.x[2]]).conj() * psi(x1p, x)
        };
        lhs.push(slice_lhs(v, x1p, &integrand)?);
    }
    let v = &first.0;
    let geo = &v.geometry;
    let p = 1.0 - geo.n() as f64 / 2.0;
    let rhs = axis_integral(geo.chart.length, |t| {
        let x = geo.axis_point(t);
        let weight = (-2.0 * v.lambda * t).exp() * geo.manifold.c(x1p, &x).powf(p) * psi(x1p, &x);
        Complex64::new(0.0, axis_t_component(v, x1p, t, field) * weight)
    });
    Ok(ConcentrationReport::new(pairs.iter().map(|p| p.0.h).collect(), lhs, rhs))
}

/// Largest |ψ| over a sample of ∂M₀ × J̃.
fn boundary_max(v: &GaussianBeam, psi: ScalarField, x1_range: (f64, f64)) -> f64 {
    let m0 = &v.geometry.manifold.transversal;
    let mut worst: f64 = 0.0;
    for i in 0..=32 {
        let x1 = x1_range.0 + (x1_range.1 - x1_range.0) * i as f64 / 32.0;
        for k in 0..256 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
            let x = [m0.radius * th.cos(), m0.radius * th.sin()];
            worst = worst.max(psi(x1, &x).abs());
        }
    }
    worst
}

/// e^{−2iλ(x₁ − it)}.
fn holomorphic_weight(lambda: f64, x1: f64, t: f64) -> Complex64 {
    (Complex64::new(0.0, -2.0 * lambda) * Complex64::new(x1, -t)).exp()
}

/// RHS = ∫_ℝ∫₀^L e^{−2iλ(x₁ − it)}ψ(x₁, γ(t))c(x₁, γ(t)) dt dx₁ over the x₁-support of ψ.
pub fn gradient_rhs(v: &GaussianBeam, psi: ScalarField, x1_support: (f64, f64), x1_nodes: usize) -> Complex64 {
    let geo = &v.geometry;
    let (xs, wx) = composite_gauss(x1_support.0, x1_support.1, x1_nodes.div_ceil(8), 8);
    xs.iter()
        .zip(&wx)
        .map(|(&x1, &w1)| {
            w1 * axis_integral(geo.chart.length, |t| {
                let x = geo.axis_point(t);
                holomorphic_weight(v.lambda, x1, t) * psi(x1, &x) * geo.manifold.c(x1, &x)
            })
        })
        .sum()
}

/// The type-2 limit for ∇_gψ:
/// LHS = h∫∫e^{−2iλx₁}(∇_gψ)(v_s)w̄_s dV_g − ∫∫e^{−2iλx₁}(∇_gψ)¹v_s w̄_s dV_g.
pub fn concentration_gradient(
    pairs: &[(GaussianBeam, GaussianBeam)],
    psi: ScalarField,
    x1_support: (f64, f64),
    x1_nodes: usize,
) -> Result<ConcentrationReport> {
    let first = pairs.first().ok_or_else(|| Error::InvalidInput("no beam pairs".into()))?;
    let worst = boundary_max(&first.0, psi, x1_support);
    if worst > BOUNDARY_TOL {
        return Err(Error::BoundaryConditionViolated(worst));
    }
    let mut lhs = Vec::with_capacity(pairs.len());
    for (v, w) in pairs {
        check_pair(v, w)?;
        if v.kind() != AmplitudeKind::Type2 {
            return Err(Error::InvalidInput("the gradient limit needs a type-2 beam v".into()));
        }
        let opts = GridOptions { x1: X1Nodes::Gauss { range: x1_support, n: x1_nodes }, ..GridOptions::riemannian(x1_support) };
        let grid = TubeGrid::for_beam(v, &opts)?;
        let chart = &v.geometry.chart;
        let beam = |q: [f64; 3]| v.eval(q[0], q[1], &[q[2]]);
        let psi_f = |q: [f64; 3]| Complex64::new(psi(q[0], &chart.point(q[1], &[q[2]])), 0.0);
        let val: Complex64 = grid
            .nodes
            .par_iter()
            .map(|n| {
                let gv = coordinate_gradient(&beam, n.x, v.h * GRADIENT_STEP_FRACTION);
                let gp = coordinate_gradient(&psi_f, n.x, PSI_STEP);
                let mut pairing = Complex64::new(0.0, 0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        pairing += gp[i] * gv[j] * n.kinv[i][j];
                    }
                }
                let first_comp = n.kinv[0][0] * gp[0];
                let prod = w.eval(n.x[0], n.x[1], &[n.x[2]]).conj();
                let weight = holomorphic_weight(v.lambda, n.x[0], 0.0);
                weight * (pairing * v.h - first_comp * beam(n.x)) * prod * n.weight
            })
            .sum();
        lhs.push(val);
    }
    let nodes = x1_nodes.max(16);
    Ok(ConcentrationReport::new(pairs.iter().map(|p| p.0.h).collect(), lhs, gradient_rhs(&first.0, psi, x1_support, nodes)))
}


#[cfg(test)]
fn gauss_integral_for_tests(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = composite_gauss(a, b, 64, 8);
    x.iter().zip(&w).map(|(&t, &wt)| f(t) * wt).sum()
}
