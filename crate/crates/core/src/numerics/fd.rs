//! Finite-difference weights on arbitrary and uniform stencils.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Weights for the `deriv`-th derivative at `x0` from nodes `xs` (Fornberg's recursion).
pub fn fornberg(x0: f64, xs: &[f64], deriv: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > deriv, "need more nodes than the derivative order");
    let m = deriv;
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Central stencil on unit spacing: offsets `-r..=r` and weights.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub radius: usize,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn offsets(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        let r = self.radius as isize;
        self.weights.iter().enumerate().map(move |(k, &w)| (k as isize - r, w))
    }
}

fn cache() -> &'static Mutex<HashMap<(usize, usize), Stencil>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Stencil>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Central stencil for the `deriv`-th derivative with formal accuracy `order` (even).
pub fn central(deriv: usize, order: usize) -> Stencil {
    assert!(deriv >= 1 && order >= 2 && order % 2 == 0);
    if let Some(s) = cache().lock().unwrap().get(&(deriv, order)) {
        return s.clone();
    }
    let radius = (deriv - 1) / 2 + order / 2;
    let xs: Vec<f64> = (-(radius as isize)..=radius as isize).map(|k| k as f64).collect();
    let mut weights = fornberg(0.0, &xs, deriv);
    // weights are exactly symmetric (even deriv) or antisymmetric (odd deriv)
    for k in 0..=radius {
        let (a, b) = (weights[radius - k], weights[radius + k]);
        if deriv % 2 == 0 {
            let s = 0.5 * (a + b);
            weights[radius - k] = s;
            weights[radius + k] = s;
        } else {
            let s = 0.5 * (b - a);
            weights[radius - k] = -s;
            weights[radius + k] = s;
        }
    }
    let s = Stencil { radius, weights };
    cache().lock().unwrap().insert((deriv, order), s.clone());
    s
}

/// Fourth-order step used for derivative order `k` given the base step.
pub fn step_for_order(base: f64, k: usize) -> f64 {
    base * 5f64.powi(k as i32 - 1)
}

/// Mixed partial derivative of `f` at `x` with multi-index `alpha`, using
/// fourth-order central stencils per coordinate.
pub fn mixed_partial<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], alpha: &[usize], base_step: f64) -> f64 {
    let total: usize = alpha.iter().sum();
    if total == 0 {
        return f(x);
    }
    let h = step_for_order(base_step, total);
    let axes: Vec<(usize, Stencil)> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(i, &a)| (i, central(a, 4)))
        .collect();
    let mut acc = 0.0;
    let mut idx = vec![0usize; axes.len()];
    let mut p = x.to_vec();
    loop {
        let mut w = 1.0;
        for (d, (axis, st)) in axes.iter().enumerate() {
            let off = idx[d] as isize - st.radius as isize;
            p[*axis] = x[*axis] + off as f64 * h;
            w *= st.weights[idx[d]];
        }
        if w != 0.0 {
            acc += w * f(&p);
        }
        let mut d = 0;
        loop {
            if d == axes.len() {
                let scale: f64 = h.powi(total as i32);
                return acc / scale;
            }
            idx[d] += 1;
            if idx[d] < axes[d].1.weights.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// `deriv`-th derivative of a uniformly sampled sequence at index `i`, switching to
/// one-sided Fornberg stencils near the ends.
pub fn sampled_derivative<T>(values: &[T], spacing: f64, i: usize, deriv: usize, order: usize) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
{
    let n = values.len();
    let width = deriv + order - 1 + (deriv % 2 == 1) as usize;
    let width = width.min(n);
    let half = width / 2;
    let start = i.saturating_sub(half).min(n - width);
    let xs: Vec<f64> = (start..start + width).map(|k| k as f64 - i as f64).collect();
    let w = fornberg(0.0, &xs, deriv);
    let mut acc = T::default();
    for (k, wk) in w.iter().enumerate() {
        acc = acc + values[start + k] * *wk;
    }
    acc * (1.0 / spacing.powi(deriv as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_fourth_order_weights() {
        let s = central(1, 4);
        let want = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in s.weights.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let s = central(2, 4);
        let want = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for (a, b) in s.weights.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let s = central(4, 4);
        let want = [-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0];
        for (a, b) in s.weights.iter().zip(want) {
            assert!((a - b / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_partial_of_polynomial() {
        let f = |p: &[f64]| p[0].powi(3) * p[1].powi(2) + p[1];
        // d^2/dx dy = 6 x^2 y
        let v = mixed_partial(&f, &[0.7, -0.4], &[1, 1], 1e-3);
        assert!((v - 6.0 * 0.49 * -0.4).abs() < 1e-8);
        let v = mixed_partial(&f, &[0.7, -0.4], &[2, 2], 1e-3);
        assert!((v - 12.0 * 0.7).abs() < 1e-5);
    }

    #[test]
    fn one_sided_sampled_derivative() {
        let xs: Vec<f64> = (0..20).map(|k| 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        for i in [0, 1, 10, 19] {
            let d = sampled_derivative(&ys, 0.1, i, 1, 6);
            assert!((d - xs[i].cos()).abs() < 1e-6, "i={i} d={d}");
        }
    }
}
