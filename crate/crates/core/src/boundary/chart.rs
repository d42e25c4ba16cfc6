//! Boundary normal coordinates (s, x_n) at a point of the lateral boundary J × ∂M₀.
//!
//! A boundary point is b(As) with b the arclength parametrization (x₁, angle) of
//! J × ∂M₀ and A the frame making the boundary metric the identity at s = 0. The chart
//! point is exp_{b(As)}(x_n ν) with ν the inward g-unit normal.

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::manifold::CtaManifold;

/// Largest RK4 step along a normal geodesic, as a fraction of the radius of M₀.
const GEODESIC_STEP: f64 = 5e-3;
/// Relative step for the s-derivatives of the chart map.
const JACOBIAN_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct BoundaryChart {
    pub manifold: CtaManifold,
    pub x1: f64,
    pub theta: f64,
    /// u = A s with u the arclength boundary parameters.
    pub frame: Matrix2<f64>,
    /// |s| and x_n bounds of the region where the chart is used.
    pub tangential_extent: f64,
    pub normal_extent: f64,
}

/// Ambient point and velocity along a normal geodesic.
pub type GeodesicState = (Vector3<f64>, Vector3<f64>);

impl BoundaryChart {
    fn radius(&self) -> f64 {
        self.manifold.transversal.radius
    }

    /// Constant c over Euclidean M₀: normal geodesics are straight lines.
    fn is_flat(&self) -> bool {
        self.manifold.transversal.is_euclidean() && matches!(self.manifold.conformal, crate::manifold::ConformalFactor::Constant { .. })
    }

    fn boundary_point(&self, u: [f64; 2]) -> Vector3<f64> {
        let r = self.radius();
        let a = self.theta + u[1] / r;
        Vector3::new(self.x1 + u[0], r * a.cos(), r * a.sin())
    }

    fn metric_at(&self, p: &Vector3<f64>) -> Result<Matrix3<f64>> {
        let g = self.manifold.metric(p.as_slice())?;
        Ok(Matrix3::from_fn(|i, j| g[(i, j)]))
    }

    /// Inward g-unit normal at the boundary point b(u).
    fn inward_normal(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        let g = self.metric_at(p)?;
        let ginv = g.try_inverse().ok_or_else(|| Error::ChartDegenerate("singular metric".into()))?;
        // dρ with ρ = (R² − |x′|²)/(2R)
        let r = self.radius();
        let drho = Vector3::new(0.0, -p[1] / r, -p[2] / r);
        let nu = ginv * drho;
        Ok(nu / nu.dot(&(g * nu)).sqrt())
    }

    /// Geodesic acceleration −Γ(v, v) of g = c(e ⊕ g₀).
    fn acceleration(&self, p: &Vector3<f64>, v: &Vector3<f64>) -> Result<Vector3<f64>> {
        let jet = self.manifold.metric_jet(p.as_slice(), 1)?;
        let dl: Vec<f64> = jet.dc.iter().map(|d| d / jet.c).collect();
        let gamma0 = self.manifold.transversal.christoffel(&p.as_slice()[1..]);
        let vp = [v[1], v[2]];
        let ghat = v[0] * v[0] + (0..2).map(|i| (0..2).map(|j| jet.g0[(i, j)] * vp[i] * vp[j]).sum::<f64>()).sum::<f64>();
        let dlv = dl[0] * v[0] + dl[1] * v[1] + dl[2] * v[2];
        // ĝ⁻¹∂ln c
        let up = jet.g0_inv * nalgebra::Vector2::new(dl[1], dl[2]);
        let sharp = Vector3::new(dl[0], up[0], up[1]);
        let mut acc = -dlv * v + 0.5 * ghat * sharp;
        for k in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += gamma0[k][(i, j)] * vp[i] * vp[j];
                }
            }
            acc[k + 1] -= s;
        }
        Ok(acc)
    }

    fn rk4(&self, y: &GeodesicState, h: f64) -> Result<GeodesicState> {
        let f = |s: &GeodesicState| -> Result<GeodesicState> { Ok((s.1, self.acceleration(&s.0, &s.1)?)) };
        let add = |s: &GeodesicState, d: &GeodesicState, k: f64| (s.0 + d.0 * k, s.1 + d.1 * k);
        let k1 = f(y)?;
        let k2 = f(&add(y, &k1, 0.5 * h))?;
        let k3 = f(&add(y, &k2, 0.5 * h))?;
        let k4 = f(&add(y, &k3, h))?;
        Ok((
            y.0 + (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * (h / 6.0),
            y.1 + (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * (h / 6.0),
        ))
    }

    /// States on the normal geodesic from b(As) at the ascending depths `xns`.
    pub fn normal_geodesic(&self, s: [f64; 2], xns: &[f64]) -> Result<Vec<GeodesicState>> {
        let u = self.frame * nalgebra::Vector2::new(s[0], s[1]);
        let p = self.boundary_point([u[0], u[1]]);
        let mut y = (p, self.inward_normal(&p)?);
        if self.is_flat() {
            return Ok(xns.iter().map(|&t| (y.0 + y.1 * t, y.1)).collect());
        }
        let max_step = GEODESIC_STEP * self.radius();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(xns.len());
        for &target in xns {
            if target < t {
                return Err(Error::InvalidInput("depths must be ascending".into()));
            }
            let steps = ((target - t) / max_step).ceil() as usize;
            let h = if steps > 0 { (target - t) / steps as f64 } else { 0.0 };
            for _ in 0..steps {
                y = self.rk4(&y, h)?;
            }
            t = target;
            out.push(y);
        }
        Ok(out)
    }

    /// Ambient point of the chart coordinates (s, x_n).
    pub fn point(&self, s: [f64; 2], xn: f64) -> Result<Vector3<f64>> {
        Ok(self.normal_geodesic(s, &[xn])?[0].0)
    }

    /// Jacobians ∂(ambient)/∂(s₁, s₂, x_n) at the ascending depths `xns` over s.
    pub fn jacobians(&self, s: [f64; 2], xns: &[f64]) -> Result<Vec<(Vector3<f64>, Matrix3<f64>)>> {
        let e = JACOBIAN_STEP * self.radius();
        let center = self.normal_geodesic(s, xns)?;
        let shifted = |k: usize, sign: f64| {
            let mut q = s;
            q[k] += sign * e;
            self.normal_geodesic(q, xns)
        };
        let (p0, m0, p1, m1) = (shifted(0, 1.0)?, shifted(0, -1.0)?, shifted(1, 1.0)?, shifted(1, -1.0)?);
        Ok((0..xns.len())
            .map(|i| {
                let c0 = (p0[i].0 - m0[i].0) / (2.0 * e);
                let c1 = (p1[i].0 - m1[i].0) / (2.0 * e);
                (center[i].0, Matrix3::from_columns(&[c0, c1, center[i].1]))
            })
            .collect())
    }

    /// Chart metric JᵀgJ at (s, x_n).
    pub fn chart_metric(&self, s: [f64; 2], xn: f64) -> Result<Matrix3<f64>> {
        let (p, j) = self.jacobians(s, &[xn])?[0];
        Ok(j.transpose() * self.metric_at(&p)? * j)
    }

    /// Chart components J⁻¹X of an ambient vector X at (s, x_n).
    pub fn chart_components(&self, s: [f64; 2], xn: f64, x: &[f64]) -> Result<[f64; 3]> {
        let (_, j) = self.jacobians(s, &[xn])?[0];
        let inv = j.try_inverse().ok_or_else(|| Error::ChartDegenerate("singular chart Jacobian".into()))?;
        let v = inv * Vector3::new(x[0], x[1], x[2]);
        Ok([v[0], v[1], v[2]])
    }
}

/// Boundary normal chart at (x₁, R cos θ, R sin θ) ∈ J × ∂M₀.
pub fn build_boundary_chart(m: &CtaManifold, x1: f64, theta: f64) -> Result<BoundaryChart> {
    if m.n() != 3 {
        return Err(Error::InvalidInput("boundary charts are implemented for n = 3".into()));
    }
    let [a, b] = m.x1_interval;
    let margin = (x1 - a).min(b - x1);
    if margin <= 0.0 {
        return Err(Error::ChartDegenerate(format!("x1 = {x1} is not inside the interior of J; corners are excluded")));
    }
    let r = m.transversal.radius;
    let mut chart = BoundaryChart {
        manifold: m.clone(),
        x1,
        theta,
        frame: Matrix2::identity(),
        tangential_extent: (0.5 * r).min(0.5 * margin),
        normal_extent: 0.5 * r,
    };
    // boundary metric in u at u = 0 from ∂b/∂u = (e₁, tangent of the circle)
    let p = chart.boundary_point([0.0, 0.0]);
    let g = chart.metric_at(&p)?;
    let bu = nalgebra::Matrix3x2::new(1.0, 0.0, 0.0, -theta.sin(), 0.0, theta.cos());
    let h: Matrix2<f64> = bu.transpose() * g * bu;
    let l = h.cholesky().ok_or_else(|| Error::ChartDegenerate("boundary metric not positive".into()))?.l();
    chart.frame = l.transpose().try_inverse().ok_or_else(|| Error::ChartDegenerate("singular boundary frame".into()))?;
    Ok(chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{ConformalFactor, TransversalMetric, TransversalModel};

    fn cylinder(conf: ConformalFactor, model: TransversalModel) -> CtaManifold {
        CtaManifold::new("cyl", [-1.0, 1.0], TransversalMetric::new(2, 1.0, model), conf).unwrap()
    }

    #[test]
    fn flat_chart_is_affine_in_the_normal() {
        let m = cylinder(ConformalFactor::Constant { value: 1.0 }, TransversalModel::Euclidean);
        let ch = build_boundary_chart(&m, 0.2, 0.7).unwrap();
        assert!((ch.frame - Matrix2::identity()).norm() < 1e-14);
        let g = ch.chart_metric([0.0, 0.0], 0.0).unwrap();
        assert!((g - Matrix3::identity()).norm() < 1e-8);
        let p = ch.point([0.05, 0.0], 0.3).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-14);
        assert!(((p[1] * p[1] + p[2] * p[2]).sqrt() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn metric_is_normalized_at_the_base_point() {
        for (conf, model) in [
            (ConformalFactor::ExpX1 { rate: 0.3 }, TransversalModel::Euclidean),
            (ConformalFactor::Radial { kappa: 0.2 }, TransversalModel::Perturbed { kappa: 0.3 }),
        ] {
            let ch = build_boundary_chart(&cylinder(conf, model), 0.4, 2.0).unwrap();
            let g = ch.chart_metric([0.0, 0.0], 0.0).unwrap();
            let ginv = g.try_inverse().unwrap();
            assert!((ginv - Matrix3::identity()).norm() < 1e-8, "{ginv}");
        }
    }

    #[test]
    fn depth_is_distance_to_the_boundary() {
        // c ≡ k and Euclidean M₀: the distance to ∂M is √k(R − |x′|)
        let k = 2.5;
        let m = cylinder(ConformalFactor::Constant { value: k }, TransversalModel::Euclidean);
        let ch = build_boundary_chart(&m, 0.0, 1.1).unwrap();
        for s in [[0.0, 0.0], [0.1, -0.05]] {
            let p = ch.point(s, 0.01).unwrap();
            let d = k.sqrt() * (1.0 - (p[1] * p[1] + p[2] * p[2]).sqrt());
            assert!((d - 0.01).abs() < 1e-6, "{d}");
        }
        // curved case: the short normal geodesic is unit speed, so its length is the depth
        let m = cylinder(ConformalFactor::Radial { kappa: 0.2 }, TransversalModel::Perturbed { kappa: 0.3 });
        let ch = build_boundary_chart(&m, 0.0, 0.3).unwrap();
        let states = ch.normal_geodesic([0.0, 0.0], &[0.0, 0.005, 0.01]).unwrap();
        for (p, v) in &states {
            let g = ch.metric_at(p).unwrap();
            assert!((v.dot(&(g * v)) - 1.0).abs() < 1e-9);
        }
        let g = ch.chart_metric([0.0, 0.0], 0.01).unwrap();
        assert!((g[(2, 2)] - 1.0).abs() < 1e-6 && g[(0, 2)].abs() < 1e-6 && g[(1, 2)].abs() < 1e-6);
    }

    #[test]
    fn corner_base_point_is_rejected() {
        let m = cylinder(ConformalFactor::Constant { value: 1.0 }, TransversalModel::Euclidean);
        assert!(matches!(build_boundary_chart(&m, 1.0, 0.0), Err(Error::ChartDegenerate(_))));
    }
}
