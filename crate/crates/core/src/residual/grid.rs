//! Quadrature grids over the beam tube in Fermi coordinates (x₁, t, y).

use super::fermi_ops::metric_value;
use crate::beam::GaussianBeam;
use crate::error::{Error, Result};
use crate::numerics::quad::{composite_gauss, gauss_legendre_on};

/// Gaussian tail exponent T: the y-range is cut where Im H·y²/h = T.
pub const TAIL_EXPONENT: f64 = 40.0;
const T_SCAN: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum X1Nodes {
    /// Gauss–Legendre on [a, b]; the weight carries the full density c^{3/2}|g_F|^{1/2}.
    Gauss { range: (f64, f64), n: usize },
    /// A single slice x₁ = value with the transversal density |g_F|^{1/2} only.
    Slice(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct GridOptions {
    pub x1: X1Nodes,
    /// θ-panels per unit √h in the t direction.
    pub t_panels: usize,
    /// y-panels are at most √h/`y_refine` wide, four Gauss nodes each.
    pub y_refine: f64,
}

impl GridOptions {
    pub fn riemannian(range: (f64, f64)) -> Self {
        GridOptions { x1: X1Nodes::Gauss { range, n: 4 }, t_panels: 1, y_refine: 4.0 }
    }

    pub fn slice(x1: f64) -> Self {
        GridOptions { x1: X1Nodes::Slice(x1), t_panels: 1, y_refine: 4.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TubeNode {
    pub x: [f64; 3],
    pub weight: f64,
    /// Inverse metric G⁻¹ in (x₁, t, y).
    pub kinv: [[f64; 3]; 3],
    /// Index of the (t, y) pair, shared by nodes that differ only in x₁.
    pub ty: usize,
}

/// Tensor-product quadrature over {(x₁, t, y)}; nodes ordered by t, then y, then x₁.
#[derive(Debug, Clone)]
pub struct TubeGrid {
    pub nodes: Vec<TubeNode>,
    /// Bound on the relative mass dropped by the Gaussian y-cut.
    pub tail_bound: f64,
    /// Smallest and largest t with a nonempty slice.
    pub t_extent: (f64, f64),
}

impl TubeGrid {
    /// Flat-metric tensor grid over a box, `n` Gauss nodes per axis.
    pub fn reference_box(bounds: [(f64, f64); 3], n: usize) -> Self {
        let axes: Vec<(Vec<f64>, Vec<f64>)> = bounds.iter().map(|&(a, b)| composite_gauss(a, b, n.div_ceil(8), 8)).collect();
        let ident = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut nodes = Vec::new();
        for (i, (&t, &wt)) in axes[1].0.iter().zip(&axes[1].1).enumerate() {
            for (k, (&y, &wy)) in axes[2].0.iter().zip(&axes[2].1).enumerate() {
                for (&x, &wx) in axes[0].0.iter().zip(&axes[0].1) {
                    let ty = i * axes[2].0.len() + k;
                    nodes.push(TubeNode { x: [x, t, y], weight: wx * wt * wy, kinv: ident, ty });
                }
            }
        }
        TubeGrid { nodes, tail_bound: 0.0, t_extent: bounds[1] }
    }

    /// Grid covering the part of the beam tube inside M, resolved at the beam's h.
    pub fn for_beam(beam: &GaussianBeam, opts: &GridOptions) -> Result<Self> {
        let geo = &beam.geometry;
        if geo.n() != 3 {
            return Err(Error::InvalidInput("tube grids are implemented for n = 3".into()));
        }
        let chart = &geo.chart;
        let half = 0.5 * beam.delta_prime;
        let (ta, tb) = geo.t_range();
        let h = beam.h;
        let nonempty = |t: f64| chart.m0_slice(t, half).is_some_and(|(a, b)| b > a);
        if nonempty(ta) || nonempty(tb) {
            return Err(Error::SupportEscapesChart(format!("M₀ slice is nonempty at the ends of [{ta}, {tb}]")));
        }
        let ts: Vec<f64> = (0..=T_SCAN).map(|k| ta + (tb - ta) * k as f64 / T_SCAN as f64).collect();
        let inside: Vec<bool> = ts.iter().map(|&t| nonempty(t)).collect();
        let first = inside.iter().position(|&b| b).ok_or_else(|| Error::InvalidInput("beam tube misses M".into()))?;
        let last = inside.iter().rposition(|&b| b).unwrap();
        let edge = |mut out: f64, mut inn: f64| {
            for _ in 0..50 {
                let mid = 0.5 * (out + inn);
                if nonempty(mid) {
                    inn = mid;
                } else {
                    out = mid;
                }
            }
            out
        };
        let t_lo = edge(ts[first - 1], ts[first]);
        let t_hi = edge(ts[last + 1], ts[last]);

        let panels = ((std::f64::consts::PI / h.sqrt()).ceil() as usize * opts.t_panels).max(8);
        let (thetas, wthetas) = composite_gauss(0.0, std::f64::consts::PI, panels, 4);
        let span = t_hi - t_lo;
        let (x1s, wx1, full) = match opts.x1 {
            X1Nodes::Gauss { range, n } => {
                let (x, w) = gauss_legendre_on(range.0, range.1, n);
                (x, w, true)
            }
            X1Nodes::Slice(x) => (vec![x], vec![1.0], false),
        };
        let mut nodes = Vec::new();
        let mut ty = 0;
        for (&th, &wth) in thetas.iter().zip(&wthetas) {
            let t = t_lo + 0.5 * span * (1.0 - th.cos());
            let wt = 0.5 * span * th.sin() * wth;
            let Some((lo, hi)) = chart.m0_slice(t, half) else { continue };
            let im_h = geo.riccati.eval(t)[(0, 0)].im;
            let cut = (TAIL_EXPONENT * h / im_h).sqrt();
            let (lo, hi) = (lo.max(-cut), hi.min(cut));
            if hi <= lo {
                continue;
            }
            let mut breaks = vec![lo];
            for b in [-half, -0.5 * half, 0.5 * half, half] {
                if b > lo && b < hi {
                    breaks.push(b);
                }
            }
            breaks.push(hi);
            let width = h.sqrt() / opts.y_refine;
            for pair in breaks.windows(2) {
                let p = ((pair[1] - pair[0]) / width).ceil().max(1.0) as usize;
                let (ys, wys) = composite_gauss(pair[0], pair[1], p, 4);
                for (&y, &wy) in ys.iter().zip(&wys) {
                    for (&x1, &wx) in x1s.iter().zip(&wx1) {
                        let (kinv, dens) = metric_value(geo, x1, t, y);
                        let density = if full {
                            dens
                        } else {
                            let c = geo.c_at(x1, t, &[y]);
                            dens / c.powf(1.5)
                        };
                        nodes.push(TubeNode { x: [x1, t, y], weight: wx * wt * wy * density, kinv, ty });
                    }
                    ty += 1;
                }
            }
        }
        Ok(TubeGrid { nodes, tail_bound: (-TAIL_EXPONENT).exp(), t_extent: (t_lo, t_hi) })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ weight·f(node).
    pub fn integrate<T, F>(&self, f: F) -> T
    where
        T: std::iter::Sum<T>,
        F: Fn(&TubeNode) -> T,
    {
        self.nodes.iter().map(f).sum()
    }
}
