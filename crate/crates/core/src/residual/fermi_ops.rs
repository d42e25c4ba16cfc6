//! Coefficients of Δ_g in Fermi coordinates (x₁, t, y) for n = 3.
//!
//! With g = c·(1 ⊕ g_F) and ℓ = ln c,
//! Δ_g u = c⁻¹[∂₁²u + g_F^{ab}∂_{ab}u + β^b∂_bu + ½(∂₁ℓ∂₁u + g_F^{ab}∂_aℓ∂_bu)],
//! β^b = |g_F|^{−1/2}∂_a(|g_F|^{1/2}g_F^{ab}).

use num_complex::Complex64;

use super::jet::Jet;
use crate::beam::BeamGeometry;
use crate::numerics::fd::fornberg;

/// Lattice spacing for transversal metric derivatives on curved charts.
const METRIC_STEP: f64 = 0.02;
const RADIUS: isize = 3;

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Transversal data at a chart node; depends on (t, y) only.
#[derive(Debug, Clone)]
pub struct TransversalJets {
    /// Φ(t, y) in ambient M₀ coordinates, order 3.
    pub point: [Jet; 2],
    /// g_F^{ab}, order 2.
    pub ginv: [[Jet; 2]; 2],
    /// β^b, order 2.
    pub beta: [Jet; 2],
    /// |g_F|^{1/2} at the node.
    pub sqrt_det: f64,
}

/// Full operator coefficients at a node (x₁, t, y).
#[derive(Debug, Clone)]
pub struct OperatorJets {
    pub cinv: Jet,
    /// ∂_i ℓ for i = x₁, t, y.
    pub dl: [Jet; 3],
    pub ginv: [[Jet; 2]; 2],
    pub beta: [Jet; 2],
    pub c: f64,
}

impl OperatorJets {
    pub fn laplacian(&self, u: &Jet) -> Jet {
        let d = [u.deriv(0), u.deriv(1), u.deriv(2)];
        let mut inner = d[0].deriv(0).add(&d[0].mul(&self.dl[0]).scale(re(0.5)));
        for a in 0..2 {
            inner = inner.add(&self.beta[a].mul(&d[a + 1]));
            for b in 0..2 {
                let second = d[a + 1].deriv(b + 1);
                let first = self.dl[a + 1].mul(&d[b + 1]).scale(re(0.5));
                inner = inner.add(&self.ginv[a][b].mul(&second.add(&first)));
            }
        }
        self.cinv.mul(&inner)
    }

    /// ⟨∇u, ∇w⟩_g.
    pub fn pairing(&self, u: &Jet, w: &Jet) -> Jet {
        let du = [u.deriv(0), u.deriv(1), u.deriv(2)];
        let dw = [w.deriv(0), w.deriv(1), w.deriv(2)];
        let mut s = du[0].mul(&dw[0]);
        for a in 0..2 {
            for b in 0..2 {
                s = s.add(&self.ginv[a][b].mul(&du[a + 1].mul(&dw[b + 1])));
            }
        }
        self.cinv.mul(&s)
    }
}

/// Fornberg weights on the 7-point lattice for derivative orders 0..=3, unscaled.
fn lattice_weights() -> Vec<Vec<f64>> {
    let xs: Vec<f64> = (-RADIUS..=RADIUS).map(|k| k as f64).collect();
    (0..=3).map(|k| fornberg(0.0, &xs, k)).collect()
}

/// Builds transversal jets at (t, y) for a beam geometry with n = 3.
pub fn transversal_jets(geo: &BeamGeometry, t: f64, y: f64) -> TransversalJets {
    let chart = &geo.chart;
    if chart.is_flat() {
        let (x0, v) = chart.axis(t);
        let e = chart.frame(t).remove(0);
        let point = [0, 1].map(|k| {
            Jet::constant(re(x0[k] + y * e[k]), 3)
                .add(&Jet::variable(1, 0.0, 3).scale(re(v[k])))
                .add(&Jet::variable(2, 0.0, 3).scale(re(e[k])))
        });
        let one = Jet::constant(re(1.0), 2);
        let zero = Jet::zero(2);
        return TransversalJets { point, ginv: [[one, zero], [zero, one]], beta: [zero, zero], sqrt_det: 1.0 };
    }
    let n = (2 * RADIUS + 1) as usize;
    let h = METRIC_STEP;
    let mut pts = Vec::with_capacity(n * n);
    let mut ginv = Vec::with_capacity(n * n);
    let mut sq = Vec::with_capacity(n * n);
    for i in -RADIUS..=RADIUS {
        for j in -RADIUS..=RADIUS {
            let (p, g) = chart.point_and_metric(t + i as f64 * h, &[y + j as f64 * h]);
            let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
            let inv = [[g[(1, 1)] / det, -g[(0, 1)] / det], [-g[(1, 0)] / det, g[(0, 0)] / det]];
            pts.push([p[0], p[1]]);
            ginv.push(inv);
            sq.push(det.sqrt());
        }
    }
    let w = lattice_weights();
    let partial = |f: &dyn Fn(usize) -> f64, et: usize, ey: usize| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            if w[et][a] == 0.0 {
                continue;
            }
            for b in 0..n {
                s += w[et][a] * w[ey][b] * f(a * n + b);
            }
        }
        s / h.powi((et + ey) as i32)
    };
    let jet_of = |f: &dyn Fn(usize) -> f64, order: usize| {
        Jet::from_partials(order, |e| if e[0] > 0 { re(0.0) } else { re(partial(f, e[1], e[2])) })
    };
    let point = [0, 1].map(|k| jet_of(&|i| pts[i][k], 3));
    let gi = [0, 1].map(|a| [0, 1].map(|b| jet_of(&|i| ginv[i][a][b], 2)));
    let s = jet_of(&|i| sq[i], 3);
    let sg = [0, 1].map(|a| [0, 1].map(|b| jet_of(&|i| sq[i] * ginv[i][a][b], 3)));
    let sinv = s.recip();
    let beta = [0, 1].map(|b| sinv.mul(&sg[0][b].deriv(1).add(&sg[1][b].deriv(2))));
    let centre = (RADIUS as usize) * n + RADIUS as usize;
    TransversalJets { point, ginv: gi, beta, sqrt_det: sq[centre] }
}

/// Adds the conformal factor at x₁ to transversal jets.
pub fn operator_jets(geo: &BeamGeometry, x1: f64, tj: &TransversalJets) -> OperatorJets {
    let conf = &geo.manifold.conformal;
    let c = if conf.transversally_constant() {
        Jet::from_partials(3, |e| if e[1] + e[2] > 0 { re(0.0) } else { re(conf.partial(x1, &[0.0, 0.0], &[e[0], 0, 0])) })
    } else {
        let p = [tj.point[0].value().re, tj.point[1].value().re];
        let outer = Jet::from_partials(3, |e| re(conf.partial(x1, &p, &e)));
        Jet::compose(&outer, &[Jet::variable(0, x1, 3), tj.point[0], tj.point[1]])
    };
    let l = c.ln();
    OperatorJets {
        cinv: c.recip().truncate(2),
        dl: [l.deriv(0), l.deriv(1), l.deriv(2)],
        ginv: tj.ginv,
        beta: tj.beta,
        c: c.value().re,
    }
}

/// Inverse metric K = G⁻¹ and |G|^{1/2} at a point, evaluated directly from the chart.
pub fn metric_value(geo: &BeamGeometry, x1: f64, t: f64, y: f64) -> ([[f64; 3]; 3], f64) {
    let (p, g) = geo.chart.point_and_metric(t, &[y]);
    let c = geo.manifold.c(x1, &p);
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    let mut k = [[0.0; 3]; 3];
    k[0][0] = 1.0 / c;
    k[1][1] = g[(1, 1)] / (det * c);
    k[2][2] = g[(0, 0)] / (det * c);
    k[1][2] = -g[(0, 1)] / (det * c);
    k[2][1] = k[1][2];
    (k, c.powf(1.5) * det.sqrt())
}

/// c^{3/2}|g_F|^{1/2}, the Riemannian density in (x₁, t, y).
pub fn volume_density(geo: &BeamGeometry, x1: f64, t: f64, y: f64) -> f64 {
    metric_value(geo, x1, t, y).1
}
