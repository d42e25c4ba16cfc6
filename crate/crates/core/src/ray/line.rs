//! Line integrals along traced geodesics of (M₀, g₀).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::{trace_geodesic, BundlePoint, GeodesicPath};
use crate::manifold::TransversalMetric;
use crate::numerics::quad::gauss_legendre;

/// Gauss nodes per quadrature interval.
const NODES_PER_INTERVAL: usize = 4;
/// Tangential margin excluded from fan-beam directions, in degrees.
pub const FAN_MARGIN_DEG: f64 = 5.0;

pub type ScalarOnM0<'a> = dyn Fn(&[f64]) -> Complex64 + Sync + 'a;
/// Components α_j of a 1-form in the coordinates of M₀.
pub type FormOnM0<'a> = dyn Fn(&[f64]) -> Vec<Complex64> + Sync + 'a;

#[derive(Debug, Clone, Serialize)]
pub struct TransformSample {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub lambda: f64,
    pub value: Complex64,
}

/// One quadrature node on a path.
#[derive(Debug, Clone)]
pub struct PathNode {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub weight: f64,
}

/// Composite Gauss rule over [0, τ] whose intervals are the integration steps,
/// further split at the given break times.
pub fn path_nodes(path: &GeodesicPath, breaks: &[f64]) -> Vec<PathNode> {
    let mut cuts: Vec<f64> = path.samples.iter().map(|s| s.t).collect();
    cuts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < path.exit_time));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let (gx, gw) = gauss_legendre(NODES_PER_INTERVAL);
    let mut out = Vec::with_capacity(cuts.len() * NODES_PER_INTERVAL);
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (&xi, &wi) in gx.iter().zip(&gw) {
            let t = mid + half * xi;
            let (x, v) = path.state_at(t);
            out.push(PathNode { t, x, v, weight: half * wi });
        }
    }
    out
}

/// Times where coordinate `axis` of the path crosses one of `levels`.
pub fn level_crossings(path: &GeodesicPath, axis: usize, levels: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for pair in path.samples.windows(2) {
        let (s0, s1) = (&pair[0], &pair[1]);
        for &lv in levels {
            let (f0, f1) = (s0.x[axis] - lv, s1.x[axis] - lv);
            if f0 == 0.0 {
                out.push(s0.t);
                continue;
            }
            if f0 * f1 >= 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (s0.t, s1.t);
            let flo = f0;
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                let fm = path.state_at(mid).0[axis] - lv;
                if fm * flo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

/// Traces unit-speed geodesics of M₀ and integrates along them.
#[derive(Debug, Clone)]
pub struct RayTracer {
    pub m0: TransversalMetric,
    pub step: f64,
    pub t_max: f64,
}

impl RayTracer {
    pub fn new(m0: &TransversalMetric, step: f64) -> Self {
        RayTracer { m0: m0.clone(), step, t_max: 100.0 * m0.diameter() }
    }

    pub fn trace(&self, bp: &BundlePoint) -> Result<GeodesicPath> {
        let path = trace_geodesic(&self.m0, bp, self.step, self.t_max)?;
        if !path.non_tangential {
            return Err(Error::TangentialStart);
        }
        Ok(path)
    }

    /// I(f, α)(x, ξ) = ∫₀^τ f(γ) + α(γ̇) dt.
    pub fn xray(&self, f: &ScalarOnM0, alpha: Option<&FormOnM0>, bp: &BundlePoint) -> Result<Complex64> {
        self.xray_split(f, alpha, bp, &[])
    }

    /// [`RayTracer::xray`] with the quadrature also split where coordinate `axis` crosses
    /// one of its levels, for integrands that are only piecewise smooth across those lines.
    pub fn xray_split(&self, f: &ScalarOnM0, alpha: Option<&FormOnM0>, bp: &BundlePoint, kinks: &[(usize, Vec<f64>)]) -> Result<Complex64> {
        let path = self.trace(bp)?;
        let breaks: Vec<f64> = kinks.iter().flat_map(|(axis, lv)| level_crossings(&path, *axis, lv)).collect();
        Ok(integrate_along(&path, &breaks, |n| {
            let mut v = f(&n.x);
            if let Some(a) = alpha {
                v += a(&n.x).iter().zip(&n.v).map(|(aj, vj)| aj * vj).sum::<Complex64>();
            }
            v
        }))
    }

    /// ∫₀^τ F(γ(t)) e^{−2λt} dt.
    pub fn attenuated_xray(&self, big_f: &ScalarOnM0, lambda: f64, bp: &BundlePoint) -> Result<Complex64> {
        let path = self.trace(bp)?;
        Ok(integrate_along(&path, &[], |n| big_f(&n.x) * (-2.0 * lambda * n.t).exp()))
    }
}

/// Σ weight·g(node) over [`path_nodes`].
pub fn integrate_along<G: Fn(&PathNode) -> Complex64>(path: &GeodesicPath, breaks: &[f64], g: G) -> Complex64 {
    path_nodes(path, breaks).iter().map(|n| g(n) * n.weight).sum()
}

/// Fan-beam family: `points` boundary points uniform in angle, `directions` per point
/// uniform over the inward cone minus the tangential margin.
pub fn fan_beam(m0: &TransversalMetric, points: usize, directions: usize) -> Result<Vec<BundlePoint>> {
    let half = (90.0 - FAN_MARGIN_DEG).to_radians();
    let mut out = Vec::with_capacity(points * directions);
    for i in 0..points {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / points as f64;
        for j in 0..directions {
            let angle = -half + 2.0 * half * (j as f64 + 0.5) / directions as f64;
            out.push(BundlePoint::on_circle(m0, theta, angle)?);
        }
    }
    Ok(out)
}

/// `count` fan-beam chords with boundary angle and direction drawn from ChaCha8(seed).
pub fn random_fan(m0: &TransversalMetric, count: usize, seed: u64) -> Result<Vec<BundlePoint>> {
    let half = (90.0 - FAN_MARGIN_DEG).to_radians();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let angle = rng.gen_range(-half..half);
            BundlePoint::on_circle(m0, theta, angle)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::TransversalModel;
    use proptest::prelude::*;

    fn one(_: &[f64]) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn diameter_start(m0: &TransversalMetric) -> BundlePoint {
        BundlePoint::on_circle(m0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn chord_length_and_attenuation() {
        let m0 = TransversalMetric::disk();
        let tr = RayTracer::new(&m0, 0.01);
        let bp = diameter_start(&m0);
        assert!((tr.xray(&one, None, &bp).unwrap() - 2.0).norm() < 1e-12);
        assert!((tr.attenuated_xray(&one, 0.0, &bp).unwrap() - 2.0).norm() < 1e-12);
        let want = 1.0 - (-2.0f64).exp();
        assert!((tr.attenuated_xray(&one, 0.5, &bp).unwrap() - want).norm() < 1e-12);
        let zero = |_: &[f64]| Complex64::new(0.0, 0.0);
        assert_eq!(tr.attenuated_xray(&zero, 0.7, &bp).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn exact_differential_integrates_to_zero() {
        for model in [TransversalModel::Euclidean, TransversalModel::Perturbed { kappa: 0.3 }] {
            let m0 = TransversalMetric::new(2, 1.0, model);
            let tr = RayTracer::new(&m0, 0.01);
            // p = (1 − r²)(1 + x + y²/2)
            let dp = |x: &[f64]| {
                let q = 1.0 - x[0] * x[0] - x[1] * x[1];
                let s = 1.0 + x[0] + 0.5 * x[1] * x[1];
                vec![Complex64::new(-2.0 * x[0] * s + q, 0.0), Complex64::new(-2.0 * x[1] * s + q * x[1], 0.0)]
            };
            let zero = |_: &[f64]| Complex64::new(0.0, 0.0);
            for bp in fan_beam(&m0, 10, 5).unwrap() {
                assert!(tr.xray(&zero, Some(&dp), &bp).unwrap().norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn gaussian_bump_matches_refined_quadrature() {
        let m0 = TransversalMetric::disk();
        let bump = |x: &[f64]| Complex64::new((-8.0 * ((x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2))).exp(), 0.0);
        let (coarse, fine) = (RayTracer::new(&m0, 0.02), RayTracer::new(&m0, 0.002));
        for bp in fan_beam(&m0, 6, 7).unwrap() {
            let (a, b) = (coarse.xray(&bump, None, &bp).unwrap(), fine.xray(&bump, None, &bp).unwrap());
            assert!((a - b).norm() <= 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn curved_attenuated_equals_xray_at_zero() {
        let m0 = TransversalMetric::new(2, 1.0, TransversalModel::SpherePatch { curvature: 0.5 });
        let tr = RayTracer::new(&m0, 0.02);
        let f = |x: &[f64]| Complex64::new(x[0] * x[0] + 0.3, x[1]);
        for bp in random_fan(&m0, 8, 3).unwrap() {
            let (a, b) = (tr.attenuated_xray(&f, 0.0, &bp).unwrap(), tr.xray(&f, None, &bp).unwrap());
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn tangential_start_is_rejected() {
        let m0 = TransversalMetric::disk();
        let bp = BundlePoint::new(&m0, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(RayTracer::new(&m0, 0.01).xray(&one, None, &bp), Err(Error::TangentialStart));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn xray_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, theta in 0.0..6.2f64, ang in -1.4..1.4f64) {
            let m0 = TransversalMetric::new(2, 1.0, TransversalModel::Perturbed { kappa: 0.2 });
            let tr = RayTracer::new(&m0, 0.05);
            let bp = BundlePoint::on_circle(&m0, theta, ang).unwrap();
            let f1 = |x: &[f64]| Complex64::new(x[0].sin(), 0.0);
            let f2 = |x: &[f64]| Complex64::new(x[1] * x[0], 1.0);
            let a1 = |x: &[f64]| vec![Complex64::new(1.0, 0.0), Complex64::new(x[0], 0.0)];
            let a2 = |x: &[f64]| vec![Complex64::new(x[1], 0.0), Complex64::new(0.0, 2.0)];
            let fc = |x: &[f64]| f1(x) * a + f2(x) * b;
            let ac = |x: &[f64]| a1(x).iter().zip(a2(x)).map(|(u, v)| u * a + v * b).collect::<Vec<_>>();
            let lhs = tr.xray(&fc, Some(&ac), &bp).unwrap();
            let rhs = tr.xray(&f1, Some(&a1), &bp).unwrap() * a + tr.xray(&f2, Some(&a2), &bp).unwrap() * b;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }
}
