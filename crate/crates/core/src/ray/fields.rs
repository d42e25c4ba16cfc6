//! Test fields on the strip [−a, a] × unit disk: a closed field ∇_g(βp) and a
//! non-closed axial control.

use std::sync::Arc;

use nalgebra::DVector;

use super::moments::FieldOnStrip;
use crate::error::{Error, Result};
use crate::manifold::CtaManifold;

/// β(x₁) = (1 − x₁²/a²)³ on |x₁| < a, with β′.
pub fn beta(a: f64, x1: f64) -> (f64, f64) {
    let u = 1.0 - x1 * x1 / (a * a);
    if u <= 0.0 {
        (0.0, 0.0)
    } else {
        (u.powi(3), -6.0 * x1 / (a * a) * u * u)
    }
}

/// p = (1 − |x′|²)(1 + x + y²/2) with its differential. Vanishes on the unit circle.
pub fn p(xp: &[f64]) -> (f64, [f64; 2]) {
    let q = 1.0 - xp[0] * xp[0] - xp[1] * xp[1];
    let s = 1.0 + xp[0] + 0.5 * xp[1] * xp[1];
    (q * s, [-2.0 * xp[0] * s + q, -2.0 * xp[1] * s + q * xp[1]])
}

/// X = ∇_g(βp) = g⁻¹d(βp).
pub fn gradient_field(m: &CtaManifold, a: f64) -> Result<FieldOnStrip> {
    if m.transversal.dim != 2 {
        return Err(Error::InvalidInput("the gradient test field lives on a 2-dimensional M0".into()));
    }
    let mm = m.clone();
    FieldOnStrip::new(
        m,
        a,
        Arc::new(move |x1, xp| {
            let (b, db) = beta(a, x1);
            let (pv, dp) = p(xp);
            let c = mm.c(x1, xp);
            let ginv = mm.transversal.g0(xp).try_inverse().expect("g0 is positive definite");
            let tail = ginv * DVector::from_vec(vec![b * dp[0], b * dp[1]]);
            vec![db * pv / c, tail[0] / c, tail[1] / c]
        }),
    )
}

/// X = β(x₁)e₁, visible to every moment with β̂(λ) ≠ 0.
pub fn axial_field(m: &CtaManifold, a: f64) -> Result<FieldOnStrip> {
    let dim = m.n();
    FieldOnStrip::new(
        m,
        a,
        Arc::new(move |x1, _| {
            let mut v = vec![0.0; dim];
            v[0] = beta(a, x1).0;
            v
        }),
    )
}
