//! Fermi coordinates (t, y) ↦ exp_{γ(t)}(Σ y_j E_j(t)) along an ε-extended geodesic.

use nalgebra::DMatrix;

use super::{contract, GeodesicPath};
use crate::error::{Error, Result};
use crate::manifold::TransversalMetric;
use crate::numerics::fd;
use crate::numerics::ode::rk4_step;

/// Node spacing of the cached axis/frame samples.
const NODE_SPACING: f64 = 1e-3;
/// RK4 steps used by every exponential-map evaluation; fixed so the map is smooth in (t, y).
const MAP_STEPS: usize = 16;
/// Transversal step of the Riccati source stencil.
const SOURCE_DY: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct FermiChart {
    pub metric: TransversalMetric,
    /// L, the exit time of the underlying geodesic.
    pub length: f64,
    /// ε = 0.05·L; the axis is available on [−2ε, L + 2ε].
    pub eps: f64,
    pub delta_prime: f64,
    dt: f64,
    k_min: i64,
    /// (x, v, E₁, …, E_{m−1}) at t = (k_min + i)·dt.
    nodes: Vec<Vec<f64>>,
}

fn transport_rhs(m0: &TransversalMetric, y: &[f64], d: &mut [f64]) {
    let m = m0.dim;
    d[..m].copy_from_slice(&y[m..2 * m]);
    if m0.is_euclidean() {
        d[m..].iter_mut().for_each(|z| *z = 0.0);
        return;
    }
    let gamma = m0.christoffel(&y[..m]);
    let v = &y[m..2 * m];
    let acc = contract(&gamma, v, v);
    for k in 0..m {
        d[m + k] = -acc[k];
    }
    for j in 0..m - 1 {
        let e = &y[(2 + j) * m..(3 + j) * m];
        let de = contract(&gamma, v, e);
        for k in 0..m {
            d[(2 + j) * m + k] = -de[k];
        }
    }
}

/// g₀-orthonormal complement of `v`; for m = 2 the frame (v, E₁) is positively oriented.
fn normal_frame(m0: &TransversalMetric, x: &[f64], v: &[f64]) -> Vec<Vec<f64>> {
    let m = m0.dim;
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if m == 2 {
        candidates.push(vec![-v[1], v[0]]);
    }
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        candidates.push(e);
    }
    for mut c in candidates {
        if basis.len() == m {
            break;
        }
        for b in &basis {
            let p = m0.inner(x, &c, b) / m0.inner(x, b, b);
            c.iter_mut().zip(b).for_each(|(ci, bi)| *ci -= p * bi);
        }
        let nrm = m0.norm(x, &c);
        if nrm > 1e-6 {
            basis.push(c.iter().map(|z| z / nrm).collect());
        }
    }
    basis.split_off(1)
}

fn reorthonormalize(m0: &TransversalMetric, state: &mut [f64]) {
    let m = m0.dim;
    let x = state[..m].to_vec();
    let v = state[m..2 * m].to_vec();
    let mut prev: Vec<Vec<f64>> = vec![v];
    for j in 0..m - 1 {
        let mut e = state[(2 + j) * m..(3 + j) * m].to_vec();
        for b in &prev {
            let p = m0.inner(&x, &e, b) / m0.inner(&x, b, b);
            e.iter_mut().zip(b).for_each(|(ei, bi)| *ei -= p * bi);
        }
        let nrm = m0.norm(&x, &e);
        e.iter_mut().for_each(|z| *z /= nrm);
        state[(2 + j) * m..(3 + j) * m].copy_from_slice(&e);
        prev.push(e);
    }
}

/// Builds the Fermi chart of `path` with tube radius `delta_prime`.
pub fn build_fermi_chart(path: &GeodesicPath, delta_prime: f64) -> Result<FermiChart> {
    if !path.non_tangential {
        return Err(Error::ChartDegenerate("geodesic is not non-tangential".into()));
    }
    if !(delta_prime > 0.0) {
        return Err(Error::InvalidInput(format!("delta_prime {delta_prime} must be positive")));
    }
    let m0 = path.metric.clone();
    let length = path.exit_time;
    let eps = 0.05 * length;
    let dt = NODE_SPACING.min(length / 100.0);
    let k_min = -((2.0 * eps / dt).ceil() as i64) - 1;
    let k_max = ((length + 2.0 * eps) / dt).ceil() as i64 + 1;
    let start = path.start();
    let mut s0 = start.x.clone();
    s0.extend_from_slice(&start.v);
    for e in normal_frame(&m0, &start.x, &start.v) {
        s0.extend(e);
    }
    let rhs = |y: &[f64], d: &mut [f64]| transport_rhs(&m0, y, d);
    let mut fwd = vec![s0.clone()];
    for k in 1..=k_max {
        let mut next = rk4_step(&rhs, fwd.last().unwrap(), dt);
        if k % 50 == 0 {
            reorthonormalize(&m0, &mut next);
        }
        fwd.push(next);
    }
    let mut bwd = Vec::new();
    let mut cur = s0;
    for k in 1..=(-k_min) {
        cur = rk4_step(&rhs, &cur, -dt);
        if k % 50 == 0 {
            reorthonormalize(&m0, &mut cur);
        }
        bwd.push(cur.clone());
    }
    bwd.reverse();
    bwd.extend(fwd);
    let chart = FermiChart { metric: m0, length, eps, delta_prime, dt, k_min, nodes: bwd };
    chart.validate()?;
    Ok(chart)
}

impl FermiChart {
    pub fn dim(&self) -> usize {
        self.metric.dim
    }

    pub fn is_flat(&self) -> bool {
        self.metric.is_euclidean()
    }

    /// (x, v, frame) on the axis at time t.
    pub fn axis_state(&self, t: f64) -> Vec<f64> {
        let k = ((t / self.dt).round() as i64).clamp(self.k_min, self.k_min + self.nodes.len() as i64 - 1);
        let node = &self.nodes[(k - self.k_min) as usize];
        let h = t - k as f64 * self.dt;
        if h == 0.0 {
            return node.clone();
        }
        rk4_step(&|y: &[f64], d: &mut [f64]| transport_rhs(&self.metric, y, d), node, h)
    }

    pub fn axis(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.dim();
        let s = self.axis_state(t);
        (s[..m].to_vec(), s[m..2 * m].to_vec())
    }

    pub fn frame(&self, t: f64) -> Vec<Vec<f64>> {
        let m = self.dim();
        let s = self.axis_state(t);
        (0..m - 1).map(|j| s[(2 + j) * m..(3 + j) * m].to_vec()).collect()
    }

    /// Φ(t, y).
    pub fn point(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let m = self.dim();
        let s = self.axis_state(t);
        let mut x = s[..m].to_vec();
        let mut w = vec![0.0; m];
        for (j, yj) in y.iter().enumerate() {
            for k in 0..m {
                w[k] += yj * s[(2 + j) * m + k];
            }
        }
        if self.is_flat() {
            x.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
            return x;
        }
        x.extend(w);
        let out = crate::numerics::ode::rk4_fixed(
            &|z: &[f64], d: &mut [f64]| super::geodesic_rhs(&self.metric, z, d),
            &x,
            1.0,
            MAP_STEPS,
        );
        out[..m].to_vec()
    }

    /// Φ(t, y) and the pulled-back metric g_F in (t, y₁, …) coordinates.
    pub fn point_and_metric(&self, t: f64, y: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let m = self.dim();
        if self.is_flat() {
            return (self.point(t, y), DMatrix::identity(m, m));
        }
        let s = self.axis_state(t);
        let x0 = &s[..m];
        let v = &s[m..2 * m];
        let frame: Vec<&[f64]> = (0..m - 1).map(|j| &s[(2 + j) * m..(3 + j) * m]).collect();
        let mut w = vec![0.0; m];
        for (j, e) in frame.iter().enumerate() {
            for k in 0..m {
                w[k] += y[j] * e[k];
            }
        }
        // layout: x, w, then m variations (δx, δw)
        let mut z = x0.to_vec();
        z.extend(&w);
        let gamma0 = self.metric.christoffel(x0);
        let mut dw_t = vec![0.0; m];
        for (j, e) in frame.iter().enumerate() {
            let g = contract(&gamma0, v, e);
            for k in 0..m {
                dw_t[k] -= y[j] * g[k];
            }
        }
        z.extend(v);
        z.extend(&dw_t);
        for e in &frame {
            z.extend(std::iter::repeat_n(0.0, m));
            z.extend(e.iter());
        }
        let metric = &self.metric;
        let rhs = |z: &[f64], d: &mut [f64]| {
            let (x, w) = (&z[..m], &z[m..2 * m]);
            let (gamma, dgamma) = metric.christoffel_jet(x);
            d[..m].copy_from_slice(w);
            let acc = contract(&gamma, w, w);
            for k in 0..m {
                d[m + k] = -acc[k];
            }
            for c in 0..m {
                let base = 2 * m + c * 2 * m;
                let dx = &z[base..base + m];
                let dw = &z[base + m..base + 2 * m];
                d[base..base + m].copy_from_slice(dw);
                let cross = contract(&gamma, w, dw);
                for k in 0..m {
                    let mut s = -2.0 * cross[k];
                    for (l, dl) in dgamma.iter().enumerate() {
                        let g = &dl[k];
                        let mut q = 0.0;
                        for i in 0..m {
                            for j in 0..m {
                                q += g[(i, j)] * w[i] * w[j];
                            }
                        }
                        s -= q * dx[l];
                    }
                    d[base + m + k] = s;
                }
            }
        };
        let out = crate::numerics::ode::rk4_fixed(&rhs, &z, 1.0, MAP_STEPS);
        let p = out[..m].to_vec();
        let jac = DMatrix::from_fn(m, m, |k, c| out[2 * m + c * 2 * m + k]);
        let g0 = self.metric.g0(&p);
        let gf = jac.transpose() * g0 * &jac;
        (p, 0.5 * (&gf + gf.transpose()))
    }

    pub fn metric_at(&self, t: f64, y: &[f64]) -> DMatrix<f64> {
        self.point_and_metric(t, y).1
    }

    pub fn inverse_metric_at(&self, t: f64, y: &[f64]) -> DMatrix<f64> {
        self.metric_at(t, y).try_inverse().expect("Fermi metric is positive definite in the chart")
    }

    /// F(t) = −½ ∂²_y g_F^{tt}(t, 0), the source making the eikonal residual O(|y|³).
    pub fn riccati_source(&self, t: f64) -> DMatrix<f64> {
        let k = self.dim() - 1;
        if self.is_flat() {
            return DMatrix::zeros(k, k);
        }
        let gtt = |y: &[f64]| self.inverse_metric_at(t, y)[(0, 0)];
        let base = SOURCE_DY / 5.0;
        let origin = vec![0.0; k];
        let f = DMatrix::from_fn(k, k, |i, j| {
            let mut alpha = vec![0; k];
            alpha[i] += 1;
            alpha[j] += 1;
            -0.5 * fd::mixed_partial(&gtt, &origin, &alpha, base)
        });
        0.5 * (&f + f.transpose())
    }

    /// Largest sub-interval of {y : Φ(t, y) ∈ M₀} around the point of maximal ρ (m = 2 only).
    pub fn m0_slice(&self, t: f64, y_max: f64) -> Option<(f64, f64)> {
        assert_eq!(self.dim(), 2, "slices are one-dimensional only for m = 2");
        let rho = |y: f64| self.metric.rho(&self.point(t, &[y]));
        let n = 64;
        let ys: Vec<f64> = (0..=n).map(|i| -y_max + 2.0 * y_max * i as f64 / n as f64).collect();
        let vals: Vec<f64> = ys.iter().map(|&y| rho(y)).collect();
        let (imax, &vmax) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if vmax < 0.0 {
            return None;
        }
        let bisect = |inside: f64, outside: f64| {
            let (mut a, mut b) = (inside, outside);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if rho(mid) >= 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        };
        let mut lo_i = imax;
        while lo_i > 0 && vals[lo_i - 1] >= 0.0 {
            lo_i -= 1;
        }
        let mut hi_i = imax;
        while hi_i < n && vals[hi_i + 1] >= 0.0 {
            hi_i += 1;
        }
        let lo = if lo_i == 0 { ys[0] } else { bisect(ys[lo_i], ys[lo_i - 1]) };
        let hi = if hi_i == n { ys[n] } else { bisect(ys[hi_i], ys[hi_i + 1]) };
        Some((lo, hi))
    }

    fn validate(&self) -> Result<()> {
        let m = self.dim();
        if self.is_flat() {
            return Ok(());
        }
        let r = 0.5 * self.delta_prime;
        for i in 0..=20 {
            let t = -self.eps + (self.length + 2.0 * self.eps) * i as f64 / 20.0;
            for j in 0..m - 1 {
                for s in [-1.0, -0.5, 0.5, 1.0] {
                    let mut y = vec![0.0; m - 1];
                    y[j] = s * r;
                    let (p, g) = self.point_and_metric(t, &y);
                    if !self.metric.in_extended(&p) {
                        return Err(Error::ChartDegenerate(format!("tube point at t = {t:.3} leaves the metric domain")));
                    }
                    let det = g.determinant();
                    if !(det > 1e-8) {
                        return Err(Error::ChartDegenerate(format!(
                            "Jacobian determinant {det:e} at t = {t:.3}, |y| = {}",
                            s * r
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
