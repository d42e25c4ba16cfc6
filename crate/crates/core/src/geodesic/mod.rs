//! Unit-speed geodesics on (M₀, g₀): tracing with exit detection, boundary
//! classification and self-intersection search.

mod cover;
mod fermi;

pub use cover::{build_cover, Cover};
pub use fermi::{build_fermi_chart, FermiChart};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::TransversalMetric;
use crate::numerics::ode::rk4_step;

/// Endpoint velocities closer than this to tangency are rejected as non-tangential.
pub const TOL_TANGENTIAL: f64 = 1e-3;
/// Exact tangency at a boundary start.
const TANGENTIAL_START: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryClass {
    Incoming,
    Outgoing,
    Tangential,
    Interior,
}

#[derive(Debug, Clone)]
pub struct BundlePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub class: BoundaryClass,
}

impl BundlePoint {
    /// Normalizes `xi` to g₀-unit length and classifies against the outward normal.
    pub fn new(m0: &TransversalMetric, x: &[f64], xi: &[f64]) -> Result<Self> {
        if x.len() != m0.dim || xi.len() != m0.dim {
            return Err(Error::InvalidInput("bundle point dimension mismatch".into()));
        }
        if !m0.contains(x) {
            return Err(Error::PointOutsideDomain(x.to_vec()));
        }
        let nrm = m0.norm(x, xi);
        if !(nrm > 0.0) {
            return Err(Error::InvalidInput("zero direction".into()));
        }
        let xi: Vec<f64> = xi.iter().map(|v| v / nrm).collect();
        let class = if m0.on_boundary(x) {
            let nu = m0.outward_normal(x);
            let s = m0.inner(x, &xi, &nu);
            if s.abs() < TANGENTIAL_START {
                BoundaryClass::Tangential
            } else if s < 0.0 {
                BoundaryClass::Incoming
            } else {
                BoundaryClass::Outgoing
            }
        } else {
            BoundaryClass::Interior
        };
        Ok(BundlePoint { x: x.to_vec(), xi, class })
    }

    /// Boundary point of the unit disk at polar angle `theta`, direction rotated by
    /// `angle` from the inward normal.
    pub fn on_circle(m0: &TransversalMetric, theta: f64, angle: f64) -> Result<Self> {
        let r = m0.radius;
        let x = [r * theta.cos(), r * theta.sin()];
        let a = theta + std::f64::consts::PI + angle;
        BundlePoint::new(m0, &x, &[a.cos(), a.sin()])
    }
}

#[derive(Debug, Clone)]
pub struct PathSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfIntersection {
    pub t1: f64,
    pub t2: f64,
    pub point: Vec<f64>,
    /// Angle between the two velocities, in [0, π].
    pub angle: f64,
}

#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub metric: TransversalMetric,
    pub samples: Vec<PathSample>,
    pub exit_time: f64,
    pub non_tangential: bool,
    pub self_intersections: Vec<SelfIntersection>,
    pub step: f64,
}

impl GeodesicPath {
    /// Wraps externally produced samples (test fixtures that need not be geodesics).
    pub fn from_samples(metric: TransversalMetric, samples: Vec<PathSample>, step: f64) -> Self {
        let exit_time = samples.last().map(|s| s.t).unwrap_or(0.0);
        GeodesicPath { metric, samples, exit_time, non_tangential: true, self_intersections: Vec::new(), step }
    }

    pub fn start(&self) -> &PathSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &PathSample {
        self.samples.last().unwrap()
    }

    /// Position and velocity at time `t` from the nearest sample by one RK4 step.
    pub fn state_at(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let i = self
            .samples
            .partition_point(|s| s.t < t)
            .min(self.samples.len() - 1);
        let j = if i > 0 && (self.samples[i - 1].t - t).abs() < (self.samples[i].t - t).abs() { i - 1 } else { i };
        let s = &self.samples[j];
        let mut y = s.x.clone();
        y.extend_from_slice(&s.v);
        let out = rk4_step(&|y: &[f64], d: &mut [f64]| geodesic_rhs(&self.metric, y, d), &y, t - s.t);
        let m = self.metric.dim;
        (out[..m].to_vec(), out[m..].to_vec())
    }
}

/// Σ_{ij} Γ^k_{ij} u^i w^j
pub fn contract(gamma: &[DMatrix<f64>], u: &[f64], w: &[f64]) -> Vec<f64> {
    gamma
        .iter()
        .map(|g| {
            let mut s = 0.0;
            for i in 0..u.len() {
                for j in 0..w.len() {
                    s += g[(i, j)] * u[i] * w[j];
                }
            }
            s
        })
        .collect()
}

/// y = (x, v); y' = (v, −Γ(v, v)).
pub fn geodesic_rhs(m0: &TransversalMetric, y: &[f64], d: &mut [f64]) {
    let m = m0.dim;
    let (x, v) = y.split_at(m);
    d[..m].copy_from_slice(v);
    if m0.is_euclidean() {
        d[m..].iter_mut().for_each(|z| *z = 0.0);
        return;
    }
    let acc = contract(&m0.christoffel(x), v, v);
    for k in 0..m {
        d[m + k] = -acc[k];
    }
}

/// Traces the unit-speed geodesic from `bp` until it leaves M₀.
pub fn trace_geodesic(m0: &TransversalMetric, bp: &BundlePoint, step: f64, t_max: f64) -> Result<GeodesicPath> {
    match bp.class {
        BoundaryClass::Tangential => return Err(Error::TangentialStart),
        BoundaryClass::Outgoing => return Err(Error::InvalidInput("start direction points out of M0".into())),
        _ => {}
    }
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("step {step} must be positive")));
    }
    let m = m0.dim;
    let rhs = |y: &[f64], d: &mut [f64]| geodesic_rhs(m0, y, d);
    let mut y = bp.x.clone();
    y.extend_from_slice(&bp.xi);
    let mut t = 0.0;
    let mut samples = vec![PathSample { t, x: bp.x.clone(), v: bp.xi.clone() }];
    loop {
        if t > t_max {
            return Err(Error::TrappedGeodesic { t_max });
        }
        let next = rk4_step(&rhs, &y, step);
        if m0.rho(&next[..m]) < 0.0 || m0.on_boundary(&next[..m]) {
            // bisection on the sub-step size for ρ∘γ = 0
            let (mut lo, mut hi) = (0.0, step);
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                if m0.rho(&rk4_step(&rhs, &y, mid)[..m]) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tau = 0.5 * (lo + hi);
            let fin = rk4_step(&rhs, &y, tau);
            t += tau;
            samples.push(PathSample { t, x: fin[..m].to_vec(), v: fin[m..].to_vec() });
            break;
        }
        y = next;
        t += step;
        samples.push(PathSample { t, x: y[..m].to_vec(), v: y[m..].to_vec() });
    }
    let mut path = GeodesicPath {
        metric: m0.clone(),
        exit_time: t,
        samples,
        non_tangential: false,
        self_intersections: Vec::new(),
        step,
    };
    path.non_tangential = check_non_tangential(&path);
    path.self_intersections = find_self_intersections(&path, 4.0 * step);
    Ok(path)
}

/// Both endpoints cross ∂M₀ with |⟨γ̇, ν⟩| above [`TOL_TANGENTIAL`] and the interior stays in M₀.
pub fn check_non_tangential(path: &GeodesicPath) -> bool {
    let m0 = &path.metric;
    let cross = |s: &PathSample| m0.inner(&s.x, &s.v, &m0.outward_normal(&s.x)).abs();
    let n = path.samples.len();
    if n < 2 {
        return false;
    }
    cross(path.start()) > TOL_TANGENTIAL
        && cross(path.end()) > TOL_TANGENTIAL
        && path.samples[1..n - 1].iter().all(|s| m0.rho(&s.x) > 0.0)
}

fn segment_closest(p0: &[f64], p1: &[f64], q0: &[f64], q1: &[f64]) -> (f64, f64, f64) {
    let d1: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    let d2: Vec<f64> = q1.iter().zip(q0).map(|(a, b)| a - b).collect();
    let r: Vec<f64> = p0.iter().zip(q0).map(|(a, b)| a - b).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let (a, e, f) = (dot(&d1, &d1), dot(&d2, &d2), dot(&d2, &r));
    let (b, c) = (dot(&d1, &d2), dot(&d1, &r));
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut u = if e > 0.0 { (b * s + f) / e } else { 0.0 };
    if u < 0.0 {
        u = 0.0;
        s = if a > 0.0 { (-c / a).clamp(0.0, 1.0) } else { 0.0 };
    } else if u > 1.0 {
        u = 1.0;
        s = if a > 0.0 { ((b - c) / a).clamp(0.0, 1.0) } else { 0.0 };
    }
    let dist2: f64 = (0..p0.len())
        .map(|k| (p0[k] + s * d1[k] - q0[k] - u * d2[k]).powi(2))
        .sum();
    (dist2.sqrt(), s, u)
}

/// Pairs of well-separated times at which the sampled path passes through the same point.
pub fn find_self_intersections(path: &GeodesicPath, radius: f64) -> Vec<SelfIntersection> {
    let s = &path.samples;
    let n = s.len();
    let mut hits: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    for i in 0..n.saturating_sub(1) {
        for j in (i + 1)..n - 1 {
            if s[j].t - s[i + 1].t <= radius {
                continue;
            }
            let (d, a, b) = segment_closest(&s[i].x, &s[i + 1].x, &s[j].x, &s[j + 1].x);
            if d < radius {
                hits.push((i, j, d, a, b));
            }
        }
    }
    // clusters of neighbouring segment pairs describe one crossing
    let span = (radius / path.step.max(1e-300)).ceil() as usize + 2;
    let mut used = vec![false; hits.len()];
    let mut out = Vec::new();
    for k in 0..hits.len() {
        if used[k] {
            continue;
        }
        let mut best = k;
        let mut stack = vec![k];
        used[k] = true;
        while let Some(c) = stack.pop() {
            for (l, h) in hits.iter().enumerate() {
                if !used[l] && h.0.abs_diff(hits[c].0) <= span && h.1.abs_diff(hits[c].1) <= span {
                    used[l] = true;
                    stack.push(l);
                    if h.2 < hits[best].2 {
                        best = l;
                    }
                }
            }
        }
        let (i, j, d, a, b) = hits[best];
        // a true crossing leaves a gap far below the sample spacing
        if d > 1e-3 * path.step.max(1e-12) + 1e-9 {
            continue;
        }
        let t1 = s[i].t + a * (s[i + 1].t - s[i].t);
        let t2 = s[j].t + b * (s[j + 1].t - s[j].t);
        let point: Vec<f64> = (0..s[i].x.len()).map(|q| s[i].x[q] + a * (s[i + 1].x[q] - s[i].x[q])).collect();
        let (v1, v2) = (&s[i].v, &s[j].v);
        let cosang = path.metric.inner(&point, v1, v2) / (path.metric.norm(&point, v1) * path.metric.norm(&point, v2));
        out.push(SelfIntersection { t1, t2, point, angle: cosang.clamp(-1.0, 1.0).acos() });
    }
    out.sort_by(|a, b| a.t1.total_cmp(&b.t1));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::TransversalModel;
    use std::f64::consts::PI;

    fn curved() -> TransversalMetric {
        TransversalMetric::new(2, 1.0, TransversalModel::Perturbed { kappa: 0.1 })
    }

    #[test]
    fn diameter_of_unit_disk() {
        let m0 = TransversalMetric::disk();
        let bp = BundlePoint::new(&m0, &[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(bp.class, BoundaryClass::Incoming);
        let p = trace_geodesic(&m0, &bp, 1e-2, 10.0).unwrap();
        assert!((p.exit_time - 2.0).abs() < 1e-10);
        assert!(p.non_tangential);
        assert!(p.self_intersections.is_empty());
    }

    #[test]
    fn oblique_chord_length() {
        let m0 = TransversalMetric::disk();
        let th = PI / 3.0;
        let bp = BundlePoint::new(&m0, &[-1.0, 0.0], &[th.cos(), th.sin()]).unwrap();
        let p = trace_geodesic(&m0, &bp, 1e-2, 10.0).unwrap();
        assert!((p.exit_time - 2.0 * th.cos()).abs() < 1e-10);
    }

    #[test]
    fn curved_exit_time_matches_refined_step() {
        let m0 = curved();
        let th = PI / 3.0;
        let bp = BundlePoint::new(&m0, &[-1.0, 0.0], &[th.cos(), th.sin()]).unwrap();
        let coarse = trace_geodesic(&m0, &bp, 1e-2, 10.0).unwrap();
        let fine = trace_geodesic(&m0, &bp, 1e-3, 10.0).unwrap();
        assert!((coarse.exit_time - fine.exit_time).abs() < 1e-7);
        assert!(fine.non_tangential && coarse.non_tangential);
    }

    #[test]
    fn exit_time_converges_at_fourth_order() {
        let m0 = curved();
        let bp = BundlePoint::new(&m0, &[-1.0, 0.0], &[0.8, 0.6]).unwrap();
        let l = |h: f64| trace_geodesic(&m0, &bp, h, 10.0).unwrap().exit_time;
        let (a, b, c) = (l(0.2), l(0.1), l(0.05));
        let reference = l(0.00625);
        let ratio = (a - reference).abs() / (b - reference).abs();
        let ratio2 = (b - reference).abs() / (c - reference).abs();
        assert!(ratio >= 12.0 && ratio2 >= 12.0, "{ratio} {ratio2}");
    }

    #[test]
    fn unit_speed_preserved() {
        for model in [TransversalModel::Perturbed { kappa: 0.2 }, TransversalModel::SpherePatch { curvature: 0.5 }] {
            let m0 = TransversalMetric::new(2, 1.0, model);
            for ang in [-1.0, -0.3, 0.0, 0.7, 1.2] {
                let bp = BundlePoint::on_circle(&m0, 2.0, ang).unwrap();
                let p = trace_geodesic(&m0, &bp, 1e-3, 20.0).unwrap();
                for s in &p.samples {
                    assert!((m0.norm(&s.x, &s.v) - 1.0).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn reversed_trace_returns_to_start() {
        let m0 = curved();
        let bp = BundlePoint::on_circle(&m0, 0.4, 0.5).unwrap();
        let p = trace_geodesic(&m0, &bp, 1e-3, 20.0).unwrap();
        let e = p.end();
        let back_dir: Vec<f64> = e.v.iter().map(|v| -v).collect();
        let mut x = e.x.clone();
        // project the exit point onto ∂M₀ so the reversed start classifies as a boundary point
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= r);
        let bp2 = BundlePoint::new(&m0, &x, &back_dir).unwrap();
        let q = trace_geodesic(&m0, &bp2, 1e-3, 20.0).unwrap();
        let d: f64 = q.end().x.iter().zip(&bp.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn start_classification_errors() {
        let m0 = TransversalMetric::disk();
        let tangential = BundlePoint::new(&m0, &[-1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(matches!(trace_geodesic(&m0, &tangential, 1e-2, 5.0), Err(Error::TangentialStart)));
        let out = BundlePoint::new(&m0, &[-1.0, 0.0], &[-1.0, 0.0]).unwrap();
        assert!(matches!(trace_geodesic(&m0, &out, 1e-2, 5.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn trapped_geodesic_reports_t_max() {
        // t_max below the chord length stands in for a trapped geodesic
        let m0 = TransversalMetric::disk();
        let bp = BundlePoint::new(&m0, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(matches!(trace_geodesic(&m0, &bp, 1e-2, 0.5), Err(Error::TrappedGeodesic { .. })));
    }

    #[test]
    fn near_grazing_chord_is_tangential() {
        let m0 = TransversalMetric::disk();
        let a = 1e-12;
        let bp = BundlePoint::new(&m0, &[-1.0, 0.0], &[a, (1.0 - a * a).sqrt()]).unwrap();
        let p = trace_geodesic(&m0, &bp, 1e-3, 5.0).unwrap();
        assert!(!check_non_tangential(&p));
    }

    #[test]
    fn curved_classification_matches_refined_oracle() {
        let m0 = curved();
        for ang in [-1.2, 0.0, 0.9, 1.5] {
            let bp = BundlePoint::on_circle(&m0, 1.0, ang).unwrap();
            let a = trace_geodesic(&m0, &bp, 1e-2, 20.0).unwrap();
            let b = trace_geodesic(&m0, &bp, 1e-3, 20.0).unwrap();
            assert_eq!(a.non_tangential, b.non_tangential);
        }
    }

    pub(crate) fn lemniscate() -> GeodesicPath {
        let step = 1e-3;
        let n = ((PI + 0.6) / step) as usize;
        let samples = (0..=n)
            .map(|k| {
                let t = -0.3 + k as f64 * (PI + 0.6) / n as f64;
                PathSample { t, x: vec![(2.0 * t).sin(), t.sin()], v: vec![2.0 * (2.0 * t).cos(), t.cos()] }
            })
            .collect();
        GeodesicPath::from_samples(TransversalMetric::disk(), samples, step)
    }

    #[test]
    fn figure_loop_has_one_crossing() {
        let p = lemniscate();
        let hits = find_self_intersections(&p, 0.05);
        assert_eq!(hits.len(), 1);
        assert!(hits[0].t1.abs() < 1e-6 && (hits[0].t2 - PI).abs() < 1e-6);
        assert!(hits[0].point.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn curved_geodesics_agree_with_all_pairs_scan() {
        let m0 = curved();
        for ang in [-0.8, 0.2, 1.1] {
            let bp = BundlePoint::on_circle(&m0, 0.3, ang).unwrap();
            let p = trace_geodesic(&m0, &bp, 1e-2, 20.0).unwrap();
            // brute force: any pair of far-apart samples closer than half a step
            let s = &p.samples;
            let mut brute = 0;
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    let d: f64 = s[i].x.iter().zip(&s[j].x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    if s[j].t - s[i].t > 0.1 && d < 0.5 * p.step {
                        brute += 1;
                    }
                }
            }
            assert_eq!(brute, 0);
            assert!(p.self_intersections.is_empty());
        }
    }
}
