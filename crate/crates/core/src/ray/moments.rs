//! Fourier profiles in x₁ of a compactly supported vector field, their attenuated
//! moments along geodesics of M₀, and the potential ψ with dψ = X♭.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use super::line::{integrate_along, RayTracer};
use crate::error::{Error, Result};
use crate::geodesic::BundlePoint;
use crate::manifold::CtaManifold;
use crate::numerics::quad::composite_gauss;

/// x₁-panels for the Fourier and cumulative integrals, eight Gauss nodes each.
const X1_PANELS: usize = 32;
/// Zero-mean tolerance on f(0, ·).
pub const ZERO_MEAN_TOL: f64 = 1e-8;
/// x′-slot mismatch above which X is declared not closed.
pub const NOT_CLOSED_TOL: f64 = 1e-4;
const SUPPORT_SAMPLES: usize = 16;

pub type VectorFieldFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Continuous vector field on ℝ × M₀ vanishing for |x₁| > a, components in (x₁, x′).
#[derive(Clone)]
pub struct FieldOnStrip {
    pub manifold: CtaManifold,
    pub field: VectorFieldFn,
    pub a: f64,
}

impl std::fmt::Debug for FieldOnStrip {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FieldOnStrip {{ manifold: {}, a: {} }}", self.manifold.name, self.a)
    }
}

impl FieldOnStrip {
    /// Rejects fields that are nonzero at sampled points with |x₁| > a.
    pub fn new(manifold: &CtaManifold, a: f64, field: VectorFieldFn) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidInput(format!("support half-width {a} must be positive")));
        }
        let out = FieldOnStrip { manifold: manifold.clone(), field, a };
        let r = 0.9 * manifold.transversal.radius;
        for k in 0..SUPPORT_SAMPLES {
            let x1 = a * (1.0 + 0.01 + 2.0 * k as f64 / SUPPORT_SAMPLES as f64);
            let th = 2.0 * std::f64::consts::PI * k as f64 / SUPPORT_SAMPLES as f64;
            let xp = [r * th.cos() * 0.5, r * th.sin() * 0.5];
            for s in [x1, -x1] {
                if (out.field)(s, &xp[..manifold.transversal.dim]).iter().any(|v| *v != 0.0) {
                    return Err(Error::InvalidInput(format!("field is nonzero at x1 = {s}, outside [-{a}, {a}]")));
                }
            }
        }
        Ok(out)
    }

    pub fn zero(manifold: &CtaManifold, a: f64) -> Self {
        let n = manifold.n();
        FieldOnStrip { manifold: manifold.clone(), field: Arc::new(move |_, _| vec![0.0; n]), a }
    }

    pub fn x1_component(&self, x1: f64, xp: &[f64]) -> f64 {
        (self.field)(x1, xp)[0]
    }

    pub fn transversal_components(&self, x1: f64, xp: &[f64]) -> Vec<f64> {
        (self.field)(x1, xp)[1..].to_vec()
    }

    /// X♭ = g X = c(X₁, g₀X′).
    pub fn flat(&self, x1: f64, xp: &[f64]) -> Vec<f64> {
        let x = (self.field)(x1, xp);
        let c = self.manifold.c(x1, xp);
        let g0 = self.manifold.transversal.g0(xp);
        let tail = g0 * DVector::from_column_slice(&x[1..]);
        let mut out = vec![c * x[0]];
        out.extend(tail.iter().map(|v| c * v));
        out
    }

    /// New field with every component multiplied by k.
    pub fn scaled(&self, k: f64) -> Self {
        let f = self.field.clone();
        FieldOnStrip { manifold: self.manifold.clone(), field: Arc::new(move |x1, xp| f(x1, xp).into_iter().map(|v| k * v).collect()), a: self.a }
    }
}

/// f(λ, x′) = ∫e^{−iλx₁}X♭₁ dx₁ and α(λ, x′) = Σ_j (∫e^{−iλx₁}X♭_j dx₁) dx_j.
#[derive(Debug, Clone)]
pub struct FourierProfiles {
    pub field: FieldOnStrip,
    pub lambda: f64,
    nodes: Vec<(f64, Complex64)>,
}

pub fn fourier_profiles(x: &FieldOnStrip, lambda: f64) -> FourierProfiles {
    let (xs, ws) = composite_gauss(-x.a, x.a, X1_PANELS, 8);
    let nodes = xs.iter().zip(&ws).map(|(&s, &w)| (s, Complex64::new(0.0, -lambda * s).exp() * w)).collect();
    FourierProfiles { field: x.clone(), lambda, nodes }
}

impl FourierProfiles {
    /// (f(λ, x′), α(λ, x′)) from a single pass over the x₁ nodes.
    pub fn at(&self, xp: &[f64]) -> (Complex64, Vec<Complex64>) {
        let m = xp.len();
        let mut f = Complex64::new(0.0, 0.0);
        let mut alpha = vec![Complex64::new(0.0, 0.0); m];
        for &(s, w) in &self.nodes {
            let xb = self.field.flat(s, xp);
            f += w * xb[0];
            for j in 0..m {
                alpha[j] += w * xb[j + 1];
            }
        }
        (f, alpha)
    }

    pub fn f(&self, xp: &[f64]) -> Complex64 {
        self.at(xp).0
    }

    pub fn alpha(&self, xp: &[f64]) -> Vec<Complex64> {
        self.at(xp).1
    }
}

/// ∫₀^τ [f(λ, γ) − iα(λ, γ̇)] e^{−λt} dt.
pub fn moment_integral(tracer: &RayTracer, x: &FieldOnStrip, lambda: f64, bp: &BundlePoint) -> Result<Complex64> {
    let prof = fourier_profiles(x, lambda);
    moment_with_profiles(tracer, &prof, bp)
}

/// [`moment_integral`] with precomputed profiles.
pub fn moment_with_profiles(tracer: &RayTracer, prof: &FourierProfiles, bp: &BundlePoint) -> Result<Complex64> {
    let path = tracer.trace(bp)?;
    let lambda = prof.lambda;
    let i = Complex64::new(0.0, 1.0);
    Ok(integrate_along(&path, &[], |n| {
        let (f, alpha) = prof.at(&n.x);
        let pair: Complex64 = alpha.iter().zip(&n.v).map(|(a, v)| a * v).sum();
        (f - i * pair) * (-lambda * n.t).exp()
    }))
}

/// ψ(x₁, x′) = ∫_{−a}^{x₁} X♭₁(y₁, x′) dy₁.
#[derive(Debug, Clone)]
pub struct Potential {
    pub field: FieldOnStrip,
    /// max |dψ − X♭| over the check points, x₁ slot and x′ slots.
    pub x1_mismatch: f64,
    pub transversal_mismatch: f64,
}

impl Potential {
    pub fn eval(&self, x1: f64, xp: &[f64]) -> f64 {
        let a = self.field.a;
        let top = x1.clamp(-a, a);
        if top <= -a {
            return 0.0;
        }
        let (ys, ws) = composite_gauss(-a, top, X1_PANELS, 8);
        ys.iter().zip(&ws).map(|(&y, &w)| w * self.field.flat(y, xp)[0]).sum()
    }
}

/// Check points: x₁ at interior fractions of (−a, a), x′ on rings inside M₀.
fn check_points(x: &FieldOnStrip) -> Vec<(f64, Vec<f64>)> {
    let r0 = x.manifold.transversal.radius;
    let m = x.manifold.transversal.dim;
    let mut out = Vec::new();
    for i in 1..8 {
        let x1 = x.a * (-1.0 + 2.0 * i as f64 / 8.0);
        for (ring, count) in [(0.0, 1), (0.3, 5), (0.6, 7), (0.85, 9)] {
            for k in 0..count {
                let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.25 * i as f64) / count as f64;
                let mut xp = vec![0.0; m];
                xp[0] = ring * r0 * th.cos();
                xp[1] = ring * r0 * th.sin();
                out.push((x1, xp));
            }
        }
    }
    out
}

/// Builds ψ with ∂_{x₁}ψ = X♭₁ and checks dψ = X♭ in every slot by central differences.
/// NotClosed when f(0, ·) is not zero or the x′ slots disagree beyond [`NOT_CLOSED_TOL`].
pub fn recover_potential(x: &FieldOnStrip) -> Result<Potential> {
    let prof = fourier_profiles(x, 0.0);
    let pts = check_points(x);
    let mean = pts.iter().map(|(_, xp)| prof.f(xp).norm()).fold(0.0, f64::max);
    if mean > ZERO_MEAN_TOL {
        return Err(Error::NotClosed(mean));
    }
    let mut pot = Potential { field: x.clone(), x1_mismatch: 0.0, transversal_mismatch: 0.0 };
    let (mut m1, mut mt): (f64, f64) = (0.0, 0.0);
    let e = 1e-4 * x.a.min(x.manifold.transversal.radius);
    for (x1, xp) in &pts {
        let xb = x.flat(*x1, xp);
        let along = |k: f64| pot.eval(x1 + k * e, xp);
        let d1 = (8.0 * (along(1.0) - along(-1.0)) - (along(2.0) - along(-2.0))) / (12.0 * e);
        m1 = m1.max((d1 - xb[0]).abs());
        for j in 0..xp.len() {
            let shifted = |k: f64| {
                let mut q = xp.clone();
                q[j] += k * e;
                pot.eval(*x1, &q)
            };
            let dj = (8.0 * (shifted(1.0) - shifted(-1.0)) - (shifted(2.0) - shifted(-2.0))) / (12.0 * e);
            mt = mt.max((dj - xb[j + 1]).abs());
        }
    }
    pot.x1_mismatch = m1;
    pot.transversal_mismatch = mt;
    if mt > NOT_CLOSED_TOL {
        return Err(Error::NotClosed(pot.transversal_mismatch));
    }
    Ok(pot)
}

#[cfg(test)]
pub(crate) mod fixtures {
    pub use crate::ray::fields::*;
    use crate::manifold::{ConformalFactor, CtaManifold, TransversalMetric};

    pub fn cylinder(conformal: ConformalFactor) -> CtaManifold {
        CtaManifold::new("strip", [-1.0, 1.0], TransversalMetric::disk(), conformal).unwrap()
    }

    pub fn gradient_field(m: &CtaManifold, a: f64) -> super::FieldOnStrip {
        crate::ray::fields::gradient_field(m, a).unwrap()
    }

    pub fn axial_field(m: &CtaManifold, a: f64) -> super::FieldOnStrip {
        crate::ray::fields::axial_field(m, a).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::manifold::{ConformalFactor, TransversalMetric, TransversalModel};
    use crate::ray::line::random_fan;

    #[test]
    fn gradient_profiles_reduce_to_beta_integral() {
        let m = cylinder(ConformalFactor::Constant { value: 1.0 });
        let a = 0.8;
        let prof = fourier_profiles(&gradient_field(&m, a), 0.0);
        let int_beta = 32.0 / 35.0 * a;
        for xp in [[0.1, 0.2], [-0.5, 0.3], [0.0, -0.9]] {
            let (f, alpha) = prof.at(&xp);
            assert!(f.norm() < 1e-13);
            let dp = p(&xp).1;
            for j in 0..2 {
                assert!((alpha[j] - int_beta * dp[j]).norm() < 1e-12);
            }
        }
        let zero = fourier_profiles(&FieldOnStrip::zero(&m, a), 0.4).at(&[0.2, 0.1]);
        assert_eq!(zero.0, Complex64::new(0.0, 0.0));
        // zero-mean axial profile
        let odd = FieldOnStrip::new(&m, a, Arc::new(move |x1, _| vec![beta(a, x1).1, 0.0, 0.0])).unwrap();
        assert!(fourier_profiles(&odd, 0.0).f(&[0.3, 0.3]).norm() < 1e-13);
    }

    #[test]
    fn gradient_moments_vanish_and_axial_moments_do_not() {
        for (conf, model) in [
            (ConformalFactor::Constant { value: 1.0 }, TransversalModel::Euclidean),
            (ConformalFactor::ExpX1 { rate: 0.3 }, TransversalModel::Perturbed { kappa: 0.3 }),
        ] {
            let m = CtaManifold::new("strip", [-1.0, 1.0], TransversalMetric::new(2, 1.0, model), conf).unwrap();
            let tr = RayTracer::new(&m.transversal, 0.02);
            let grad = gradient_field(&m, 0.8);
            let axial = axial_field(&m, 0.8);
            let fan = random_fan(&m.transversal, 20, 11).unwrap();
            for lambda in [0.0, 0.5, 1.0] {
                let (pg, pa) = (fourier_profiles(&grad, lambda), fourier_profiles(&axial, lambda));
                let mut worst_axial: f64 = 0.0;
                for bp in &fan {
                    let g = moment_with_profiles(&tr, &pg, bp).unwrap();
                    assert!(g.norm() <= 1e-6, "lambda {lambda}: {g}");
                    worst_axial = worst_axial.max(moment_with_profiles(&tr, &pa, bp).unwrap().norm());
                }
                assert!(worst_axial > 0.01);
            }
        }
    }

    #[test]
    fn moments_scale_with_real_factor() {
        let m = cylinder(ConformalFactor::ExpX1 { rate: 0.3 });
        let tr = RayTracer::new(&m.transversal, 0.05);
        let x = axial_field(&m, 0.5);
        let bp = random_fan(&m.transversal, 1, 2).unwrap().remove(0);
        for k in [-1.5, 0.25, 3.0] {
            let (a, b) = (moment_integral(&tr, &x, 0.7, &bp).unwrap(), moment_integral(&tr, &x.scaled(k), 0.7, &bp).unwrap());
            assert!((b - a * k).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn potential_recovers_beta_p() {
        for conf in [ConformalFactor::Constant { value: 1.0 }, ConformalFactor::ExpX1 { rate: 0.3 }] {
            let m = cylinder(conf);
            let a = 0.8;
            let pot = recover_potential(&gradient_field(&m, a)).unwrap();
            for x1 in [-0.7, -0.2, 0.0, 0.45, 0.79, 0.95] {
                for xp in [[0.0, 0.0], [0.4, -0.3], [-0.7, 0.6]] {
                    let want = beta(a, x1).0 * p(&xp).0;
                    assert!((pot.eval(x1, &xp) - want).abs() <= 1e-6);
                }
            }
            assert!(pot.x1_mismatch <= 1e-6 && pot.transversal_mismatch <= 1e-6, "{pot:?}");
        }
        let zero = recover_potential(&FieldOnStrip::zero(&cylinder(ConformalFactor::Constant { value: 1.0 }), 0.5)).unwrap();
        assert_eq!(zero.eval(0.1, &[0.2, 0.2]), 0.0);
    }

    #[test]
    fn transversal_constant_field_is_not_closed() {
        let m = cylinder(ConformalFactor::Constant { value: 1.0 });
        let x = FieldOnStrip::new(&m, 0.5, Arc::new(|x1, _| vec![0.0, if x1.abs() < 0.5 { 0.7 } else { 0.0 }, 0.0])).unwrap();
        assert!(matches!(recover_potential(&x), Err(Error::NotClosed(_))));
    }

    #[test]
    fn support_outside_strip_is_rejected() {
        let m = cylinder(ConformalFactor::Constant { value: 1.0 });
        assert!(FieldOnStrip::new(&m, 0.5, Arc::new(|_, _| vec![1.0, 0.0, 0.0])).is_err());
    }
}
