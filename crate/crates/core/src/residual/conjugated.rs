//! The conjugated biharmonic residual e^{σsx₁}(−h²Δ_g)²e^{−σsx₁}v on a tube grid.
//!
//! Writing e^{−σsx₁}v = e^{−sφ̃}a with φ̃ = σx₁ − iφ, the residual is h⁴e^{isφ}P²a where
//! P = −Δ + sL − s²f, La = 2⟨∇φ̃, ∇a⟩ + Δφ̃·a and f = ⟨∇φ̃, ∇φ̃⟩.

use std::cell::RefCell;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fermi_ops::{operator_jets, transversal_jets, TransversalJets};
use super::grid::TubeGrid;
use super::jet::Jet;
use crate::beam::GaussianBeam;
use crate::error::{Error, Result};
use crate::numerics::bump::plateau_cutoff_deriv;
use crate::numerics::fd::fornberg;

/// Disagreement between the two modes, relative in L², that is reported as a coarse grid.
pub const MODE_MISMATCH_TOL: f64 = 0.1;
/// Direct-mode lattice spacing as a fraction of h.
pub const DIRECT_STEP_FRACTION: f64 = 1.0 / 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// Nine-term expansion of P²a with Taylor jets of phase, amplitude and metric.
    Expansion,
    /// Nested eighth-order differences of the full conjugated product.
    Direct,
}

#[derive(Debug, Clone)]
pub struct ResidualField {
    pub mode: ResidualMode,
    pub values: Vec<Complex64>,
    pub l2: f64,
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn ensure_n3(beam: &GaussianBeam) -> Result<()> {
    if beam.n() != 3 {
        return Err(Error::InvalidInput("residuals are implemented for n = 3".into()));
    }
    Ok(())
}

/// Σ_j χ_j(t)·a^{(j)}(x₁, t) as a jet in (x₁, t).
fn amplitude_jet(beam: &GaussianBeam, x1: f64, t: f64) -> Jet {
    let geo = &beam.geometry;
    let conf = &geo.manifold.conformal;
    let p = geo.n() as f64 / 4.0 - 0.5;
    let c = if conf.transversally_constant() {
        Jet::from_partials(4, |e| if e[1] + e[2] > 0 { re(0.0) } else { re(conf.partial(x1, &[0.0, 0.0], &[e[0], 0, 0])) })
    } else {
        let derivs: Vec<Vec<f64>> = (0..=4).map(|k| geo.axis_derivative(t, k)).collect();
        let axis = [0, 1].map(|d| Jet::from_partials(4, |e| if e[0] + e[2] > 0 { re(0.0) } else { re(derivs[e[1]][d]) }));
        let outer = Jet::from_partials(4, |e| re(conf.partial(x1, &derivs[0], &e)));
        Jet::compose(&outer, &[Jet::variable(0, x1, 4), axis[0], axis[1]])
    };
    let log_c = c.ln().scale(re(p));
    let r = &geo.riccati;
    let htr: Vec<Complex64> = (0..4).map(|k| 0.5 * r.derivative(t, k).trace()).collect();
    let mut total = Jet::zero(4);
    for (j, prof) in beam.profiles.iter().enumerate() {
        let cut: Vec<f64> = (0..=4).map(|k| geo.cover.cutoff_deriv(j, t, k)).collect();
        if cut.iter().all(|v| *v == 0.0) {
            continue;
        }
        let g0 = prof.log_part(t);
        let g = Jet::from_partials(4, |e| {
            if e[0] + e[2] > 0 {
                re(0.0)
            } else if e[1] == 0 {
                g0
            } else if e[1] == 1 {
                htr[0] + prof.log_slope
            } else {
                htr[e[1] - 1]
            }
        });
        let mut a = log_c.add(&g).scale(re(-1.0)).exp();
        if let Some(lat) = &prof.dbar {
            let u = Jet::from_partials(4, |e| if e[2] > 0 { re(0.0) } else { lat.partial(x1, t, e[0], e[1]) });
            a = a.mul(&u);
        }
        let chi = Jet::from_partials(4, |e| if e[0] + e[2] > 0 { re(0.0) } else { re(cut[e[1]]) });
        total = total.add(&a.mul(&chi));
    }
    total
}

/// Phase jet φ(t + τ, y + η) = t + τ + ½H(t + τ)(y + η)².
fn phase_jet(beam: &GaussianBeam, t: f64, y: f64) -> Jet {
    let r = &beam.geometry.riccati;
    let hs: Vec<Complex64> = (0..=4).map(|k| r.derivative(t, k)[(0, 0)]).collect();
    let hj = Jet::from_partials(4, |e| if e[0] + e[2] > 0 { re(0.0) } else { hs[e[1]] });
    let yv = Jet::variable(2, y, 4);
    Jet::variable(1, t, 4).add(&hj.mul(&yv.mul(&yv)).scale(re(0.5)))
}

/// The nine terms of h⁴e^{isφ}P²a at one node, in the order
/// Δ²a, −sΔ(La), s²Δ(fa), −sL(Δa), s²L²a, −s³L(fa), s²fΔa, −s³fLa, s⁴f²a.
fn terms_at(beam: &GaussianBeam, x1: f64, t: f64, y: f64, tj: &TransversalJets) -> [Complex64; 9] {
    let ops = operator_jets(&beam.geometry, x1, tj);
    let dp = beam.delta_prime;
    let chi = Jet::from_partials(4, |e| {
        if e[0] + e[1] > 0 {
            re(0.0)
        } else {
            re(plateau_cutoff_deriv(y / dp, e[2]) / dp.powi(e[2] as i32))
        }
    });
    let a = amplitude_jet(beam, x1, t).mul(&chi).scale(re(beam.scale()));
    let phi = phase_jet(beam, t, y);
    let i = Complex64::new(0.0, 1.0);
    let phit = Jet::variable(0, x1, 4).scale(re(beam.carleman_sign)).sub(&phi.scale(i));
    let f = ops.pairing(&phit, &phit);
    let lap_phit = ops.laplacian(&phit);
    let ell = |u: &Jet| ops.pairing(&phit, u).scale(re(2.0)).add(&lap_phit.mul(u));
    let s = beam.s;
    let lap_a = ops.laplacian(&a);
    let la = ell(&a);
    let fa = f.mul(&a);
    let raw = [
        ops.laplacian(&lap_a).value(),
        -s * ops.laplacian(&la).value(),
        s * s * ops.laplacian(&fa).value(),
        -s * ell(&lap_a).value(),
        s * s * ell(&la).value(),
        -s * s * s * ell(&fa).value(),
        s * s * f.value() * lap_a.value(),
        -s * s * s * f.value() * la.value(),
        s.powu(4) * f.value() * fa.value(),
    ];
    let w = beam.h.powi(4) * (i * s * phi.value()).exp();
    raw.map(|v| v * w)
}

/// The nine residual terms at a single point of the tube.
pub fn expansion_terms(beam: &GaussianBeam, x1: f64, t: f64, y: f64) -> Result<[Complex64; 9]> {
    ensure_n3(beam)?;
    let tj = transversal_jets(&beam.geometry, t, y);
    Ok(terms_at(beam, x1, t, y, &tj))
}

/// Values of f = ⟨∇φ̃, ∇φ̃⟩_g at a point.
pub fn eikonal_value(beam: &GaussianBeam, x1: f64, t: f64, y: f64) -> Result<Complex64> {
    ensure_n3(beam)?;
    let tj = transversal_jets(&beam.geometry, t, y);
    let ops = operator_jets(&beam.geometry, x1, &tj);
    let phi = phase_jet(beam, t, y);
    let phit = Jet::variable(0, x1, 4).scale(re(beam.carleman_sign)).sub(&phi.scale(Complex64::new(0.0, 1.0)));
    Ok(ops.pairing(&phit, &phit).value())
}

const R: i32 = 8;

/// (g_F⁻¹, |g_F|^{1/2}, Φ) per (t, y) lattice offset; shared by nodes that differ only in x₁.
type TransCache = RefCell<Vec<Option<([[f64; 2]; 2], f64, [f64; 2])>>>;

fn trans_cache() -> TransCache {
    RefCell::new(vec![None; SIDE * SIDE])
}
const SIDE: usize = (2 * R + 1) as usize;

fn idx(q: [i32; 3]) -> usize {
    ((q[0] + R) as usize * SIDE + (q[1] + R) as usize) * SIDE + (q[2] + R) as usize
}

/// Memoized lattice p + δ·q, |q_i| ≤ 8, around one grid node.
struct DirectLattice<'a> {
    beam: &'a GaussianBeam,
    p: [f64; 3],
    delta: f64,
    mixed: bool,
    d1: Vec<f64>,
    d2: Vec<f64>,
    amp: RefCell<Vec<Option<Complex64>>>,
    hval: RefCell<Vec<Option<Complex64>>>,
    /// (K, |G|^{1/2}) per lattice point.
    metric: RefCell<Vec<Option<([[f64; 3]; 3], f64)>>>,
    /// (g_F^{-1}, |g_F|^{1/2}, Φ) per (t, y) offset.
    trans: &'a TransCache,
    w: RefCell<Vec<Option<Complex64>>>,
    lap: RefCell<Vec<Option<Complex64>>>,
}

impl<'a> DirectLattice<'a> {
    fn new(beam: &'a GaussianBeam, p: [f64; 3], trans: &'a TransCache) -> Self {
        let xs: Vec<f64> = (-4..=4).map(|k| k as f64).collect();
        let n3 = SIDE * SIDE * SIDE;
        DirectLattice {
            beam,
            p,
            delta: beam.h * DIRECT_STEP_FRACTION,
            mixed: !beam.geometry.chart.is_flat(),
            d1: fornberg(0.0, &xs, 1),
            d2: fornberg(0.0, &xs, 2),
            amp: RefCell::new(vec![None; SIDE * SIDE]),
            hval: RefCell::new(vec![None; SIDE]),
            metric: RefCell::new(vec![None; n3]),
            trans,
            w: RefCell::new(vec![None; n3]),
            lap: RefCell::new(vec![None; n3]),
        }
    }

    fn coord(&self, q: [i32; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| self.p[k] + self.delta * q[k] as f64)
    }

    fn transversal(&self, q: [i32; 3]) -> ([[f64; 2]; 2], f64, [f64; 2]) {
        let k = (q[1] + R) as usize * SIDE + (q[2] + R) as usize;
        if let Some(v) = self.trans.borrow()[k] {
            return v;
        }
        let x = self.coord(q);
        let (pt, g) = self.beam.geometry.chart.point_and_metric(x[1], &[x[2]]);
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        let inv = [[g[(1, 1)] / det, -g[(0, 1)] / det], [-g[(1, 0)] / det, g[(0, 0)] / det]];
        let v = (inv, det.sqrt(), [pt[0], pt[1]]);
        self.trans.borrow_mut()[k] = Some(v);
        v
    }

    fn metric(&self, q: [i32; 3]) -> ([[f64; 3]; 3], f64) {
        let k = idx(q);
        if let Some(v) = self.metric.borrow()[k] {
            return v;
        }
        let (inv, sq, pt) = self.transversal(q);
        let c = self.beam.geometry.manifold.c(self.coord(q)[0], &pt);
        let mut m = [[0.0; 3]; 3];
        m[0][0] = 1.0 / c;
        for a in 0..2 {
            for b in 0..2 {
                m[a + 1][b + 1] = inv[a][b] / c;
            }
        }
        let v = (m, c.powf(1.5) * sq);
        self.metric.borrow_mut()[k] = Some(v);
        v
    }

    /// e^{−σs(q₁ − p₁)}·v(q).
    fn w(&self, q: [i32; 3]) -> Complex64 {
        let k = idx(q);
        if let Some(v) = self.w.borrow()[k] {
            return v;
        }
        let b = self.beam;
        let x = self.coord(q);
        let (ta, tb) = b.geometry.t_range();
        let v = if x[1] < ta || x[1] > tb || x[2].abs() > 0.5 * b.delta_prime {
            Complex64::new(0.0, 0.0)
        } else {
            let ka = (q[0] + R) as usize * SIDE + (q[1] + R) as usize;
            let cached = self.amp.borrow()[ka];
            let amp = match cached {
                Some(a) => a,
                None => {
                    let a = b.amplitude(x[0], x[1]);
                    self.amp.borrow_mut()[ka] = Some(a);
                    a
                }
            };
            let kh = (q[1] + R) as usize;
            let cached = self.hval.borrow()[kh];
            let hv = match cached {
                Some(hv) => hv,
                None => {
                    let hv = b.geometry.riccati.eval(x[1])[(0, 0)];
                    self.hval.borrow_mut()[kh] = Some(hv);
                    hv
                }
            };
            let phase = Complex64::new(x[1], 0.0) + 0.5 * hv * x[2] * x[2];
            let i = Complex64::new(0.0, 1.0);
            let weight = -b.carleman_sign * b.s * (self.delta * q[0] as f64);
            (weight + i * b.s * phase).exp() * amp * (b.scale() * b.transversal_cutoff(&[x[2]]))
        };
        self.w.borrow_mut()[k] = Some(v);
        v
    }

    fn shifted(q: [i32; 3], axis: usize, by: i32) -> [i32; 3] {
        let mut r = q;
        r[axis] += by;
        r
    }

    /// b^j = |G|^{−1/2}∂_i(|G|^{1/2}K^{ij}) at q by differences of the metric lattice.
    fn drift(&self, q: [i32; 3]) -> [f64; 3] {
        let (_, sq) = self.metric(q);
        let mut b = [0.0; 3];
        for i in 0..3 {
            for (o, wgt) in (-4..=4).zip(&self.d1) {
                if *wgt == 0.0 {
                    continue;
                }
                let (k, s) = self.metric(Self::shifted(q, i, o));
                for (j, bj) in b.iter_mut().enumerate() {
                    *bj += wgt * s * k[i][j];
                }
            }
        }
        b.map(|v| v / (self.delta * sq))
    }

    /// Δ_g u(q) from values of u on the lattice.
    fn laplace(&self, q: [i32; 3], u: &dyn Fn([i32; 3]) -> Complex64) -> Complex64 {
        let (k, _) = self.metric(q);
        let b = self.drift(q);
        let (h1, h2) = (self.delta, self.delta * self.delta);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            let (mut first, mut second) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for (o, (w1, w2)) in (-4..=4).zip(self.d1.iter().zip(&self.d2)) {
                let v = u(Self::shifted(q, i, o));
                first += v * *w1;
                second += v * *w2;
            }
            acc += second * (k[i][i] / h2) + first * (b[i] / h1);
        }
        if self.mixed {
            let mut cross = Complex64::new(0.0, 0.0);
            for (o1, w1) in (-4..=4).zip(&self.d1) {
                if *w1 == 0.0 {
                    continue;
                }
                for (o2, w2) in (-4..=4).zip(&self.d1) {
                    if *w2 == 0.0 {
                        continue;
                    }
                    cross += u(Self::shifted(Self::shifted(q, 1, o1), 2, o2)) * (w1 * w2);
                }
            }
            acc += cross * (2.0 * k[1][2] / h2);
        }
        acc
    }

    fn lap_w(&self, q: [i32; 3]) -> Complex64 {
        let k = idx(q);
        if let Some(v) = self.lap.borrow()[k] {
            return v;
        }
        let v = self.laplace(q, &|r| self.w(r));
        self.lap.borrow_mut()[k] = Some(v);
        v
    }

    fn residual(&self) -> Complex64 {
        self.laplace([0, 0, 0], &|q| self.lap_w(q)) * self.beam.h.powi(4)
    }
}

/// h⁴Δ²[e^{−σs(x₁ − p₁)}v](p) by nested differences with step h/20.
pub fn direct_residual_at(beam: &GaussianBeam, x1: f64, t: f64, y: f64) -> Result<Complex64> {
    ensure_n3(beam)?;
    let cache = trans_cache();
    Ok(DirectLattice::new(beam, [x1, t, y], &cache).residual())
}

pub fn conjugated_residual(beam: &GaussianBeam, grid: &TubeGrid, mode: ResidualMode) -> Result<ResidualField> {
    ensure_n3(beam)?;
    // nodes sharing (t, y) are contiguous
    let groups: Vec<&[super::grid::TubeNode]> = grid.nodes.chunk_by(|a, b| a.ty == b.ty).collect();
    let values: Vec<Complex64> = match mode {
        ResidualMode::Expansion => groups
                .par_iter()
                .flat_map_iter(|g| {
                    let tj = transversal_jets(&beam.geometry, g[0].x[1], g[0].x[2]);
                    g.iter()
                        .map(|n| terms_at(beam, n.x[0], n.x[1], n.x[2], &tj).iter().sum::<Complex64>())
                    .collect::<Vec<_>>()
            })
            .collect(),
        ResidualMode::Direct => groups
            .par_iter()
            .flat_map_iter(|g| {
                let cache = trans_cache();
                g.iter().map(|n| DirectLattice::new(beam, n.x, &cache).residual()).collect::<Vec<_>>()
            })
            .collect(),
    };
    let l2 = grid.nodes.iter().zip(&values).map(|(n, v)| n.weight * v.norm_sqr()).sum::<f64>().sqrt();
    Ok(ResidualField { mode, values, l2 })
}

/// Both modes on the same grid; fails with GridTooCoarse beyond `MODE_MISMATCH_TOL`.
pub fn cross_checked_residual(beam: &GaussianBeam, grid: &TubeGrid) -> Result<(ResidualField, ResidualField, f64)> {
    let e = conjugated_residual(beam, grid, ResidualMode::Expansion)?;
    let d = conjugated_residual(beam, grid, ResidualMode::Direct)?;
    let rel = (e.l2 - d.l2).abs() / e.l2.max(d.l2);
    if rel > MODE_MISMATCH_TOL {
        return Err(Error::GridTooCoarse(format!(
            "expansion L² {:.6e} and direct L² {:.6e} differ by {:.1}%",
            e.l2,
            d.l2,
            100.0 * rel
        )));
    }
    Ok((e, d, rel))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::beam::tests_support::{chord_geometry, flat_chord_geometry};
    use crate::beam::{assemble_beam_v, solve_amplitude_type1, BeamGeometry};
    use crate::manifold::ConformalFactor;
    use crate::residual::{scaling_slope, GridOptions};

    const HS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

    fn beam_on(geo: &Arc<BeamGeometry>, h: f64, delta_prime: f64) -> GaussianBeam {
        let a = solve_amplitude_type1(geo, Complex64::new(0.0, 0.0));
        assemble_beam_v(&[a], h, 0.0, delta_prime).unwrap()
    }

    fn sweep(geo: &Arc<BeamGeometry>) -> Vec<(f64, f64)> {
        HS.iter()
            .map(|&h| {
                let b = beam_on(geo, h, 8.0);
                let g = TubeGrid::for_beam(&b, &GridOptions::riemannian((-1.0, 1.0))).unwrap();
                (h, conjugated_residual(&b, &g, ResidualMode::Expansion).unwrap().l2)
            })
            .collect()
    }

    #[test]
    fn flat_residual_scales_faster_than_h_to_the_2_3() {
        let pairs = sweep(&flat_chord_geometry(ConformalFactor::Constant { value: 1.0 }));
        assert!(pairs.windows(2).all(|w| w[1].1 < w[0].1), "{pairs:?}");
        let r = scaling_slope(&pairs).unwrap();
        assert!(r.slope >= 2.3, "{r:?}");
    }

    #[test]
    fn corrupted_riccati_is_detected() {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 1.0 });
        let mut broken = (*geo).clone();
        broken.riccati = broken.riccati.shifted(Complex64::new(0.1, 0.0));
        let r = scaling_slope(&sweep(&Arc::new(broken))).unwrap();
        assert!(r.slope < 2.0, "{r:?}");
    }

    #[test]
    fn modes_agree_on_conformal_cylinder() {
        let geo = flat_chord_geometry(ConformalFactor::ExpX1 { rate: 0.3 });
        let b = beam_on(&geo, 0.05, 8.0);
        let g = TubeGrid::for_beam(&b, &GridOptions::riemannian((-1.0, 1.0))).unwrap();
        let (e, d, rel) = cross_checked_residual(&b, &g).unwrap();
        assert!(rel < 0.05, "{} {}", e.l2, d.l2);
    }

    #[test]
    fn modes_agree_pointwise_on_curved_chart() {
        let geo = chord_geometry();
        let b = beam_on(&geo, 0.05, 0.3);
        for &(x1, t, y) in &[(0.1, 0.7, 0.05), (-0.4, 1.2, -0.02), (0.6, 0.4, 0.0)] {
            let e: Complex64 = expansion_terms(&b, x1, t, y).unwrap().iter().sum();
            let d = direct_residual_at(&b, x1, t, y).unwrap();
            assert!((e - d).norm() < 1e-3 * e.norm(), "{e} {d}");
        }
    }

    #[test]
    fn eikonal_and_second_transport_terms_vanish_on_axis() {
        let geo = flat_chord_geometry(ConformalFactor::Constant { value: 1.0 });
        let b = beam_on(&geo, 0.05, 8.0);
        for &(x1, t) in &[(0.0, 0.5), (0.3, 1.1), (-0.7, 1.8)] {
            let terms = expansion_terms(&b, x1, t, 0.0).unwrap();
            let scale = terms.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for k in [2, 4, 5, 6, 7, 8] {
                assert!(terms[k].norm() < 1e-9 * scale.max(1.0), "term {k}: {}", terms[k]);
            }
            assert!(eikonal_value(&b, x1, t, 0.0).unwrap().norm() < 1e-12);
        }
    }
}
