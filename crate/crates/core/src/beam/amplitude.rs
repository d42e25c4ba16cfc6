//! Leading amplitudes a₀ (first and second type) and b₀ (the w-side).

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cauchy::{dbar_residual, solve_dbar, Lattice};
use super::BeamGeometry;
use crate::error::{Error, Result};
use crate::numerics::fd::sampled_derivative;

/// Target accuracy of the ∂̄ identity for type-2 amplitudes.
pub const TYPE2_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeKind {
    Type1,
    Type2,
    WSide,
}

/// A leading amplitude on one cover interval.
///
/// With ψ(x₁, t) = (n/4 − 1/2)·ln c(x₁, γ(t)) + G(t) the amplitude is e^{−ψ} for type 1 and
/// the w-side (G read as F there) and e^{−ψ}·u for type 2, where ∂_{z̄}u = c/2.
#[derive(Debug, Clone)]
pub struct AmplitudeProfile {
    pub kind: AmplitudeKind,
    pub geometry: Arc<BeamGeometry>,
    pub t0: f64,
    /// G(t0), or F(t0) on the w-side.
    pub initial: Complex64,
    /// Extra slope added to G; zero except in negative controls.
    pub log_slope: Complex64,
    pub dbar: Option<Lattice>,
    /// max |(∂_{x₁} − i∂_t)u/c − 1| over the interior of the lattice (type 2 only).
    pub dbar_residual: Option<f64>,
}

impl AmplitudeProfile {
    /// G(t) = G(t0) + ∫_{t0}^t ½ tr H.
    pub fn log_part(&self, t: f64) -> Complex64 {
        let r = &self.geometry.riccati;
        self.initial + r.half_trace_integral(t) - r.half_trace_integral(self.t0) + self.log_slope * (t - self.t0)
    }

    /// ψ(x₁, t) = (n/4 − 1/2)·ln c(x₁, γ(t)) + G(t).
    pub fn phi(&self, x1: f64, t: f64) -> Complex64 {
        let n = self.geometry.n() as f64;
        (n / 4.0 - 0.5) * self.geometry.c_axis(x1, t).ln() + self.log_part(t)
    }

    /// e^{ψ}·a₀: identically 1 for type 1 and the w-side, u for type 2.
    pub fn holomorphic_factor(&self, x1: f64, t: f64) -> Complex64 {
        match &self.dbar {
            Some(lat) => lat.interpolate(x1, t),
            None => Complex64::new(1.0, 0.0),
        }
    }

    pub fn value(&self, x1: f64, t: f64) -> Complex64 {
        (-self.phi(x1, t)).exp() * self.holomorphic_factor(x1, t)
    }

    /// Copy with G corrupted by `slope`·(t − t0).
    pub fn corrupted(&self, slope: Complex64) -> Self {
        AmplitudeProfile { log_slope: self.log_slope + slope, ..self.clone() }
    }

    fn with_initial(&self, initial: Complex64) -> Self {
        AmplitudeProfile { initial, ..self.clone() }
    }
}

fn first_type(geometry: &Arc<BeamGeometry>, kind: AmplitudeKind, initial: Complex64) -> AmplitudeProfile {
    AmplitudeProfile {
        kind,
        geometry: geometry.clone(),
        t0: geometry.riccati.t0,
        initial,
        log_slope: Complex64::new(0.0, 0.0),
        dbar: None,
        dbar_residual: None,
    }
}

/// a₀ = c(x₁, γ(t))^{1/2−n/4}·e^{−G(t)} with G(t0) = `g_init`.
pub fn solve_amplitude_type1(geometry: &Arc<BeamGeometry>, g_init: Complex64) -> AmplitudeProfile {
    first_type(geometry, AmplitudeKind::Type1, g_init)
}

/// b₀ = c(x₁, γ(t))^{1/2−n/4}·e^{−F(t)} with F(t0) = `f_init`.
pub fn solve_amplitude_w(geometry: &Arc<BeamGeometry>, f_init: Complex64) -> AmplitudeProfile {
    first_type(geometry, AmplitudeKind::WSide, f_init)
}

/// a₀ = e^{−ψ}·u where u solves ∂_{z̄}u = c(x₁, γ(t))/2, z = x₁ − it, on
/// `x1_range` × beam parameter range, sampled with lattice `spacing`.
pub fn solve_amplitude_type2(
    geometry: &Arc<BeamGeometry>,
    g_init: Complex64,
    x1_range: (f64, f64),
    spacing: f64,
) -> Result<AmplitudeProfile> {
    if geometry.self_intersecting || geometry.cover.len() > 1 {
        return Err(Error::Type2SelfIntersection);
    }
    if !(x1_range.1 > x1_range.0) || !(spacing > 0.0) {
        return Err(Error::InvalidInput("type-2 rectangle must be nonempty with positive spacing".into()));
    }
    let t_range = geometry.t_range();
    let geo = geometry.clone();
    let source = move |x1: f64, t: f64| Complex64::new(0.5 * geo.c_axis(x1, t), 0.0);
    // the integration rectangle strictly contains the evaluation one
    let lattice = solve_dbar(&source, x1_range, t_range, spacing, 8.0 * spacing);
    let res = dbar_residual(&lattice, &|x1, t| Complex64::new(geometry.c_axis(x1, t), 0.0), 0.8);
    if res > 10.0 * TYPE2_TOL {
        return Err(Error::QuadratureDiverged(res));
    }
    let mut profile = first_type(geometry, AmplitudeKind::Type2, g_init);
    profile.dbar = Some(lattice);
    profile.dbar_residual = Some(res);
    Ok(profile)
}

/// e^{−(G(t) + conj F(t))}·π^{(n−2)/2}/√det Im H(t).
pub fn pair_constant(a: &AmplitudeProfile, b: &AmplitudeProfile, t: f64) -> Complex64 {
    let k = a.geometry.riccati.size() as f64;
    let det = a.geometry.riccati.eval(t).map(|z| z.im).determinant();
    (-(a.log_part(t) + b.log_part(t).conj())).exp() * std::f64::consts::PI.powf(k / 2.0) / det.sqrt()
}

/// Shifts the initial values so that G(t0) = F(t0) = ½·ln(π^{(n−2)/2}/√det Im H(t0)),
/// which makes `pair_constant` equal to 1.
pub fn normalize_pair(a: &AmplitudeProfile, b: &AmplitudeProfile, t0: f64) -> (AmplitudeProfile, AmplitudeProfile) {
    let k = a.geometry.riccati.size() as f64;
    let det = a.geometry.riccati.eval(t0).map(|z| z.im).determinant();
    let target = Complex64::new(0.5 * (std::f64::consts::PI.powf(k / 2.0) / det.sqrt()).ln(), 0.0);
    let shift = |p: &AmplitudeProfile| {
        let current = p.log_part(t0);
        p.with_initial(p.initial + target - current)
    };
    (shift(a), shift(b))
}

/// Transport residual on an `nx` × `nt` grid over `x1_range` × the interior 80% of the
/// beam parameter range.
///
/// First type: max |∂̄a₀ + (∂̄ψ_c − (i/2)tr H)a₀| with ∂̄ = ∂_{x₁} − i∂_t and
/// ψ_c = (n/4 − 1/2)·ln c, which vanishes exactly when G′ = ½ tr H. Second type:
/// max |(1/c)(∂_{x₁} − i∂_t)(e^{ψ}a₀) − 1| over the interior of the stored lattice.
pub fn transport_residual(profile: &AmplitudeProfile, x1_range: (f64, f64), nx: usize, nt: usize) -> f64 {
    let geo = &profile.geometry;
    if let Some(lat) = &profile.dbar {
        let u = Lattice {
            x1: lat.x1.clone(),
            t: lat.t.clone(),
            values: lat
                .t
                .iter()
                .flat_map(|&t| lat.x1.iter().map(move |&x| (x, t)))
                .map(|(x, t)| profile.phi(x, t).exp() * profile.value(x, t))
                .collect(),
        };
        return dbar_residual(&u, &|x1, t| Complex64::new(geo.c_axis(x1, t), 0.0), 0.8);
    }
    let (ta, tb) = geo.t_range();
    let pad = 0.1 * (tb - ta);
    let (ta, tb) = (ta + pad, tb - pad);
    let dx = (x1_range.1 - x1_range.0) / (nx - 1) as f64;
    let dt = (tb - ta) / (nt - 1) as f64;
    let xs: Vec<f64> = (0..nx).map(|i| x1_range.0 + i as f64 * dx).collect();
    let ts: Vec<f64> = (0..nt).map(|j| ta + j as f64 * dt).collect();
    let n = geo.n() as f64;
    let a: Vec<Complex64> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).map(|(x, t)| profile.value(x, t)).collect();
    let lc: Vec<f64> = ts
        .iter()
        .flat_map(|&t| xs.iter().map(move |&x| (x, t)))
        .map(|(x, t)| (n / 4.0 - 0.5) * geo.c_axis(x, t).ln())
        .collect();
    let i = Complex64::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    for (j, &t) in ts.iter().enumerate() {
        let half_tr = geo.riccati.eval(t).trace() * 0.5;
        for xi in 0..nx {
            let row_a: Vec<Complex64> = (0..nx).map(|q| a[j * nx + q]).collect();
            let col_a: Vec<Complex64> = (0..nt).map(|q| a[q * nx + xi]).collect();
            let row_c: Vec<f64> = (0..nx).map(|q| lc[j * nx + q]).collect();
            let col_c: Vec<f64> = (0..nt).map(|q| lc[q * nx + xi]).collect();
            let dbar_a = sampled_derivative(&row_a, dx, xi, 1, 8) - i * sampled_derivative(&col_a, dt, j, 1, 8);
            let dbar_c = sampled_derivative(&row_c, dx, xi, 1, 8) - i * sampled_derivative(&col_c, dt, j, 1, 8);
            let r = dbar_a + (dbar_c - i * half_tr) * a[j * nx + xi];
            worst = worst.max(r.norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::tests_support::{chord_geometry, flat_chord_geometry};
    use crate::manifold::ConformalFactor;

    #[test]
    fn type1_flat_closed_form() {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 1.0 });
        let a = solve_amplitude_type1(&geo, Complex64::new(0.0, 0.0));
        for &t in &[0.0, 0.5, 1.0, 2.0] {
            let want = (1.0 + t * t as f64).powf(-0.25) * Complex64::new(0.0, -0.5 * f64::atan(t)).exp();
            for &x1 in &[-0.7, 0.0, 0.4] {
                assert!((a.value(x1, t) - want).norm() < 1e-10, "t={t}");
            }
        }
    }

    #[test]
    fn type1_exponential_conformal_factor() {
        let geo = flat_chord_geometry(ConformalFactor::ExpX1 { rate: 1.0 });
        let a = solve_amplitude_type1(&geo, Complex64::new(0.0, 0.0));
        for &(x1, t) in &[(0.3, 0.2), (-0.5, 1.5)] {
            let want = (-x1 / 4.0 - a.log_part(t)).exp();
            assert!((a.value(x1, t) - want).norm() < 1e-13);
        }
        assert!((a.phi(0.3, 0.2) + a.value(0.3, 0.2).ln()).norm() < 1e-12);
    }

    #[test]
    fn w_side_constant_factor() {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 3.0 });
        let b = solve_amplitude_w(&geo, Complex64::new(0.0, 0.0));
        let want = 3f64.powf(-0.25) * (-b.log_part(1.2)).exp();
        assert!((b.value(0.1, 1.2) - want).norm() < 1e-13);
    }

    #[test]
    fn normalized_pair_is_constant() {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 1.0 });
        let a = solve_amplitude_type1(&geo, Complex64::new(0.3, 0.1));
        let b = solve_amplitude_w(&geo, Complex64::new(-0.2, 0.4));
        let (a, b) = normalize_pair(&a, &b, 0.0);
        let quarter_ln_pi = 0.25 * std::f64::consts::PI.ln();
        assert!((a.log_part(0.0) - quarter_ln_pi).norm() < 1e-14);
        assert!((b.log_part(0.0) - quarter_ln_pi).norm() < 1e-14);
        for &t in &[0.0, 0.5, 1.0, 1.9] {
            assert!((pair_constant(&a, &b, t) - 1.0).norm() < 1e-8, "t={t}");
        }
        let geo = chord_geometry();
        let (a, b) = normalize_pair(&solve_amplitude_type1(&geo, 0.0.into()), &solve_amplitude_w(&geo, 0.0.into()), 0.7);
        for &t in &[0.0, 0.7, 1.6] {
            assert!((pair_constant(&a, &b, t) - 1.0).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn transport_residual_first_type() {
        for geo in [flat_chord_geometry(ConformalFactor::ExpX1 { rate: 0.3 }), chord_geometry()] {
            let a = solve_amplitude_type1(&geo, Complex64::new(0.2, 0.0));
            assert!(transport_residual(&a, (-0.5, 0.5), 41, 121) < 1e-8);
            let bad = a.corrupted(Complex64::new(0.5, 0.0));
            assert!(transport_residual(&bad, (-0.5, 0.5), 41, 121) > 0.1);
        }
    }

    #[test]
    fn type2_constant_two() {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 2.0 });
        let a = solve_amplitude_type2(&geo, Complex64::new(0.0, 0.0), (-0.5, 0.5), 0.02).unwrap();
        assert!(transport_residual(&a, (-0.5, 0.5), 0, 0) < 1e-4);
        assert!(a.dbar_residual.unwrap() < 1e-4);
    }

    #[test]
    fn type2_exponential() {
        let geo = flat_chord_geometry(ConformalFactor::ExpX1 { rate: 1.0 });
        let a = solve_amplitude_type2(&geo, Complex64::new(0.0, 0.0), (-0.5, 0.5), 0.02).unwrap();
        assert!(transport_residual(&a, (-0.5, 0.5), 0, 0) < 1e-4);
    }
}
