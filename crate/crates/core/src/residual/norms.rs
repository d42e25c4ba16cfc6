//! L² and semiclassical H¹ norms on tube grids.

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::{TubeGrid, TubeNode};
use crate::numerics::fd::fornberg;

/// Gradient step as a fraction of h.
pub const GRADIENT_STEP_FRACTION: f64 = 1.0 / 20.0;

/// (‖u‖²)^{1/2} from values at the grid nodes.
pub fn l2_norm(values: &[Complex64], grid: &TubeGrid) -> f64 {
    grid.nodes.iter().zip(values).map(|(n, v)| n.weight * v.norm_sqr()).sum::<f64>().sqrt()
}

/// Coordinate gradient (∂_{x₁}, ∂_t, ∂_y)u at x by eighth-order central differences.
pub fn coordinate_gradient(u: &(dyn Fn([f64; 3]) -> Complex64 + Sync), x: [f64; 3], step: f64) -> [Complex64; 3] {
    let xs: Vec<f64> = (-4..=4).map(|k| k as f64).collect();
    let w = fornberg(0.0, &xs, 1);
    [0, 1, 2].map(|axis| {
        let mut d = Complex64::new(0.0, 0.0);
        for (o, wk) in (-4..=4).zip(&w) {
            if *wk == 0.0 {
                continue;
            }
            let mut q = x;
            q[axis] += o as f64 * step;
            d += u(q) * *wk;
        }
        d / step
    })
}

/// g(∇u, ∇u) with the inverse metric stored on the node.
pub fn gradient_norm_sqr(node: &TubeNode, grad: &[Complex64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += node.kinv[i][j] * (grad[i] * grad[j].conj()).re;
        }
    }
    s
}

/// (‖u‖² + ‖h∇_g u‖²)^{1/2} with differences of step h/20.
pub fn h1scl_norm(u: &(dyn Fn([f64; 3]) -> Complex64 + Sync), grid: &TubeGrid, h: f64) -> f64 {
    let step = h * GRADIENT_STEP_FRACTION;
    grid.nodes
        .par_iter()
        .map(|n| {
            let g = coordinate_gradient(u, n.x, step);
            n.weight * (u(n.x).norm_sqr() + h * h * gradient_norm_sqr(n, &g))
        })
        .sum::<f64>()
        .sqrt()
}
