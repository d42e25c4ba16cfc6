//! Assembled quasimodes v_s, w_s in Fermi coordinates (x₁, t, y).

use std::sync::Arc;

use num_complex::Complex64;

use super::amplitude::{AmplitudeKind, AmplitudeProfile};
use super::BeamGeometry;
use crate::error::{Error, Result};
use crate::numerics::bump::plateau_cutoff;

/// Adjacent profiles must agree to this relative tolerance on cover overlaps.
pub const OVERLAP_TOL: f64 = 1e-8;

/// v_s = Σ_j χ_j(t)·e^{isφ(t,y)}·h^{−(n−2)/4}·a^{(j)}(x₁, t)·χ(|y|/δ′) (or w_s with b₀).
///
/// Immutable once assembled; evaluation is safe from many threads.
#[derive(Debug, Clone)]
pub struct GaussianBeam {
    pub h: f64,
    pub lambda: f64,
    pub s: Complex64,
    /// +1 for v_s (weight e^{sx₁} on the left), −1 for w_s.
    pub carleman_sign: f64,
    pub geometry: Arc<BeamGeometry>,
    pub profiles: Vec<AmplitudeProfile>,
    pub delta_prime: f64,
}

impl GaussianBeam {
    pub fn n(&self) -> usize {
        self.geometry.n()
    }

    pub fn kind(&self) -> AmplitudeKind {
        self.profiles[0].kind
    }

    /// h^{−(n−2)/4}.
    pub fn scale(&self) -> f64 {
        self.h.powf(-((self.n() - 2) as f64) / 4.0)
    }

    /// Lower bound d in Im φ ≥ d|y|²: half the smallest eigenvalue of Im H on the path.
    pub fn waist_constant(&self) -> f64 {
        0.5 * self.geometry.riccati.min_imag_eig()
    }

    fn in_tube(&self, t: f64, y: &[f64]) -> bool {
        let (a, b) = self.geometry.t_range();
        let r2: f64 = y.iter().map(|v| v * v).sum();
        t >= a && t <= b && r2.sqrt() <= 0.5 * self.delta_prime && y.len() == self.n() - 2
    }

    /// φ^{(j)}(t, y) = t + ½H(t)y·y.
    pub fn phase_eval(&self, j: usize, t: f64, y: &[f64]) -> Result<Complex64> {
        if j >= self.profiles.len() || !self.in_tube(t, y) {
            return Err(Error::PointOutsideTube { t, y: y.to_vec() });
        }
        Ok(self.phase(t, y))
    }

    pub(crate) fn phase(&self, t: f64, y: &[f64]) -> Complex64 {
        if y.iter().all(|v| *v == 0.0) {
            return Complex64::new(t, 0.0);
        }
        let h = self.geometry.riccati.eval(t);
        let mut q = Complex64::new(0.0, 0.0);
        for (i, yi) in y.iter().enumerate() {
            for (k, yk) in y.iter().enumerate() {
                q += h[(i, k)] * (yi * yk);
            }
        }
        Complex64::new(t, 0.0) + 0.5 * q
    }

    /// Σ_j χ_j(t)·a^{(j)}(x₁, t).
    pub fn amplitude(&self, x1: f64, t: f64) -> Complex64 {
        let cover = &self.geometry.cover;
        if self.profiles.len() == 1 {
            return self.profiles[0].value(x1, t);
        }
        self.profiles
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let w = cover.cutoff(j, t);
                if w == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    p.value(x1, t) * w
                }
            })
            .sum()
    }

    /// Transversal cutoff χ(|y|/δ′).
    pub fn transversal_cutoff(&self, y: &[f64]) -> f64 {
        let r: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        plateau_cutoff(r / self.delta_prime)
    }

    /// Beam value at Fermi coordinates; zero outside the tube.
    pub fn eval(&self, x1: f64, t: f64, y: &[f64]) -> Complex64 {
        if !self.in_tube(t, y) {
            return Complex64::new(0.0, 0.0);
        }
        let chi = self.transversal_cutoff(y);
        if chi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let i = Complex64::new(0.0, 1.0);
        (i * self.s * self.phase(t, y)).exp() * self.amplitude(x1, t) * (self.scale() * chi)
    }
}

fn assemble(
    profiles: &[AmplitudeProfile],
    h: f64,
    lambda: f64,
    delta_prime: f64,
    sign: f64,
) -> Result<GaussianBeam> {
    let first = profiles.first().ok_or_else(|| Error::InvalidInput("no amplitude profiles".into()))?;
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidInput(format!("h = {h} is outside (0, 1]")));
    }
    let geometry = first.geometry.clone();
    let cover = &geometry.cover;
    if profiles.len() != cover.len() {
        return Err(Error::InvalidInput(format!("{} profiles for {} cover intervals", profiles.len(), cover.len())));
    }
    if profiles.iter().any(|p| p.kind == AmplitudeKind::Type2) && (geometry.self_intersecting || cover.len() > 1) {
        return Err(Error::Type2SelfIntersection);
    }
    for j in 1..profiles.len() {
        let (lo, hi) = (cover.intervals[j].0, cover.intervals[j - 1].1);
        let x1 = 0.5 * (geometry.manifold.x1_interval[0] + geometry.manifold.x1_interval[1]);
        for k in 0..=8 {
            let t = lo + (hi - lo) * k as f64 / 8.0;
            let (a, b) = (profiles[j - 1].value(x1, t), profiles[j].value(x1, t));
            let mismatch = (a - b).norm() / a.norm().max(b.norm());
            if mismatch > OVERLAP_TOL {
                return Err(Error::OverlapMismatch(mismatch));
            }
        }
    }
    Ok(GaussianBeam {
        h,
        lambda,
        s: Complex64::new(1.0 / h, lambda),
        carleman_sign: sign,
        geometry,
        profiles: profiles.to_vec(),
        delta_prime,
    })
}

/// Quasimode v_s for e^{sx₁}(−h²Δ_g)²e^{−sx₁}.
pub fn assemble_beam_v(profiles: &[AmplitudeProfile], h: f64, lambda: f64, delta_prime: f64) -> Result<GaussianBeam> {
    assemble(profiles, h, lambda, delta_prime, 1.0)
}

/// Quasimode w_s for e^{−sx₁}(−h²Δ_g)²e^{sx₁}.
pub fn assemble_beam_w(profiles: &[AmplitudeProfile], h: f64, lambda: f64, delta_prime: f64) -> Result<GaussianBeam> {
    assemble(profiles, h, lambda, delta_prime, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::tests_support::flat_chord_geometry;
    use crate::beam::{solve_amplitude_type1, solve_amplitude_type2};
    use crate::manifold::ConformalFactor;

    fn flat_beam(h: f64) -> GaussianBeam {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 1.0 });
        let a = solve_amplitude_type1(&geo, Complex64::new(0.0, 0.0));
        assemble_beam_v(&[a], h, 0.0, 8.0).unwrap()
    }

    #[test]
    fn phase_on_axis_and_flat_value() {
        let b = flat_beam(0.1);
        assert_eq!(b.phase_eval(0, 0.7, &[0.0]).unwrap(), Complex64::new(0.7, 0.0));
        assert!((b.phase_eval(0, 0.0, &[0.2]).unwrap() - Complex64::new(0.0, 0.02)).norm() < 1e-12);
        assert!(matches!(b.phase_eval(0, 5.0, &[0.0]), Err(Error::PointOutsideTube { .. })));
    }

    #[test]
    fn imaginary_phase_bounded_below() {
        let b = flat_beam(0.1);
        for i in 0..=40 {
            let t = 2.0 * i as f64 / 40.0;
            for k in 1..=20 {
                let y = 0.05 * k as f64;
                assert!(b.phase(t, &[y]).im >= 0.1 * y * y * (1.0 - 1e-9));
            }
        }
        // the beam range extends to t = 2.2 where Im H = 1/5.84
        assert!(b.waist_constant() >= 0.085);
    }

    #[test]
    fn axis_value_and_cutoff_edge() {
        let b = flat_beam(0.1);
        let a = &b.profiles[0];
        for &(x1, t) in &[(0.0, 0.3), (0.5, 1.7)] {
            let want = (Complex64::new(0.0, 10.0 * t)).exp() * 0.1f64.powf(-0.25) * a.value(x1, t);
            assert!((b.eval(x1, t, &[0.0]) - want).norm() < 1e-12);
        }
        assert_eq!(b.eval(0.0, 1.0, &[4.0]), Complex64::new(0.0, 0.0));
        assert_eq!(b.eval(0.0, 1.0, &[-4.0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn slice_mass_stays_bounded() {
        let mass = |h: f64| {
            let b = flat_beam(h);
            let (n, m) = (400, 800);
            let mut s = 0.0;
            for i in 0..n {
                let t = 2.0 * (i as f64 + 0.5) / n as f64;
                let ymax = (1.0 - (t - 1.0) * (t - 1.0)).max(0.0).sqrt();
                for k in 0..m {
                    let y = -ymax + 2.0 * ymax * (k as f64 + 0.5) / m as f64;
                    s += b.eval(0.0, t, &[y]).norm_sqr() * (2.0 / n as f64) * (2.0 * ymax / m as f64);
                }
            }
            s.sqrt()
        };
        let (coarse, fine) = (mass(0.1), mass(0.0125));
        assert!(fine < 2.0 * coarse && fine > 0.5 * coarse, "{coarse} {fine}");
    }

    #[test]
    fn assembly_errors() {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 1.0 });
        let a = solve_amplitude_type1(&geo, Complex64::new(0.0, 0.0));
        assert!(assemble_beam_v(&[], 0.1, 0.0, 8.0).is_err());
        assert!(assemble_beam_v(&[a.clone(), a], 0.1, 0.0, 8.0).is_err());
        let t2 = solve_amplitude_type2(&geo, Complex64::new(0.0, 0.0), (-0.5, 0.5), 0.05).unwrap();
        assert!(assemble_beam_w(&[t2], 0.1, 0.3, 8.0).is_ok());
    }
}
