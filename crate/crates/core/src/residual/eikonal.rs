//! Shell maxima of the eikonal defect f = ⟨∇φ̃, ∇φ̃⟩_g.

use super::conjugated::eikonal_value;
use crate::beam::GaussianBeam;
use crate::error::Result;
use crate::numerics::fit::{scaling_slope, ScalingReport};

/// t-samples per shell, spread over the interior of [0, L].
const SHELL_SAMPLES: usize = 65;

/// max over {|y| = r} of |f| at the midpoint of J, per radius, with the fitted exponent.
pub fn eikonal_residual(beam: &GaussianBeam, radii: &[f64]) -> Result<ScalingReport> {
    let geo = &beam.geometry;
    let x1 = 0.5 * (geo.manifold.x1_interval[0] + geo.manifold.x1_interval[1]);
    let l = geo.chart.length;
    let mut pairs = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut worst: f64 = 0.0;
        for k in 0..SHELL_SAMPLES {
            let t = l * (0.05 + 0.9 * k as f64 / (SHELL_SAMPLES - 1) as f64);
            for y in [-r, r] {
                worst = worst.max(eikonal_value(beam, x1, t, y)?.norm());
            }
        }
        pairs.push((r, worst));
    }
    scaling_slope(&pairs)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::beam::tests_support::{chord_geometry, flat_chord_geometry};
    use crate::beam::{assemble_beam_v, solve_amplitude_type1};
    use crate::manifold::ConformalFactor;

    #[test]
    fn flat_defect_is_quartic_and_matches_closed_form() {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 1.0 });
        let b = assemble_beam_v(&[solve_amplitude_type1(&geo, Complex64::new(0.0, 0.0))], 0.1, 0.0, 8.0).unwrap();
        let r = eikonal_residual(&b, &[0.05, 0.1, 0.2, 0.4]).unwrap();
        assert!(r.slope >= 3.9 && r.slope <= 4.1, "{r:?}");
        // f = −¼Ḣ²y⁴ with Ḣ = −H² and H = (t + i)/(1 + t²)
        let (t, y): (f64, f64) = (0.8, 0.3);
        let hh = Complex64::new(t, 1.0) / (1.0 + t * t);
        let want = -0.25 * (hh * hh).powu(2) * y.powi(4);
        assert!((eikonal_value(&b, 0.0, t, y).unwrap() - want).norm() < 1e-9);
        assert!(eikonal_value(&b, 0.0, t, 0.0).unwrap().norm() <= 1e-10);
    }

    #[test]
    fn curved_defect_is_at_least_cubic() {
        let geo = chord_geometry();
        let b = assemble_beam_v(&[solve_amplitude_type1(&geo, Complex64::new(0.0, 0.0))], 0.1, 0.0, 0.3).unwrap();
        let r = eikonal_residual(&b, &[0.01, 0.02, 0.04, 0.08]).unwrap();
        assert!(r.slope >= 2.9, "{r:?}");
    }
}
