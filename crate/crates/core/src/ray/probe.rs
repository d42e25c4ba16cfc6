//! Discrete forward matrix of the X-ray transform on a tensor-spline basis and its
//! singular spectrum.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::line::{level_crossings, path_nodes, RayTracer};
use super::spline::BSpline;
use crate::error::{Error, Result};
use crate::geodesic::BundlePoint;
use crate::manifold::TransversalMetric;

/// Relative singular-value threshold defining the numerical kernel.
pub const KERNEL_TOL: f64 = 1e-8;
/// Minimum ratio of geodesics to unknowns.
pub const OVERSAMPLING: usize = 3;

/// Cubic tensor splines on the square [−w, w]², extended by zero.
///
/// Functions use N_i(x)N_j(y). A 1-form is M_i(x)N_j(y)dx + N_i(x)M_j(y)dy with M the
/// quadratic basis on the same breakpoints, so dp lies in the span for every cubic p.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    pub half_width: f64,
    pub n: usize,
    cubic: BSpline,
    quad: BSpline,
}

impl SplineBasis {
    pub fn new(half_width: f64, n: usize) -> Self {
        let cubic = BSpline::clamped(-half_width, half_width, n, 3);
        let quad = cubic.reduced();
        SplineBasis { half_width, n, cubic, quad }
    }

    /// Largest square basis on a disk of radius r, with a small margin from ∂M₀.
    pub fn inscribed(radius: f64, n: usize) -> Self {
        Self::new(0.7 * radius, n)
    }

    pub fn function_count(&self) -> usize {
        self.n * self.n
    }

    pub fn form_count(&self) -> usize {
        2 * self.n * (self.n - 1)
    }

    /// Column of the dx coefficient M_i(x)N_j(y).
    fn dx_index(&self, i: usize, j: usize) -> usize {
        self.function_count() + i * self.n + j
    }

    /// Column of the dy coefficient N_i(x)M_j(y).
    fn dy_index(&self, i: usize, j: usize) -> usize {
        self.function_count() + self.n * (self.n - 1) + i * (self.n - 1) + j
    }

    /// Coefficient vectors of (0, dp) for the cubic p vanishing on the square's edges.
    pub fn gauge_vectors(&self) -> Vec<Vec<f64>> {
        let total = self.function_count() + self.form_count();
        let mut out = Vec::new();
        for i in self.cubic.interior_indices() {
            for j in self.cubic.interior_indices() {
                let mut v = vec![0.0; total];
                for (k, c) in self.cubic.derivative_in_reduced(i) {
                    v[self.dx_index(k, j)] += c;
                }
                for (k, c) in self.cubic.derivative_in_reduced(j) {
                    v[self.dy_index(i, k)] += c;
                }
                out.push(v);
            }
        }
        out
    }

    /// Knot lines x = k and y = k, in the form taken by [`RayTracer::xray_split`].
    pub fn kinks(&self) -> Vec<(usize, Vec<f64>)> {
        let b = self.cubic.breakpoints();
        vec![(0, b.clone()), (1, b)]
    }

    /// Indices (i, j) of the cubic p = N_i(x)N_j(y) vanishing on the square's edges.
    pub fn interior_functions(&self) -> Vec<(usize, usize)> {
        let r = self.cubic.interior_indices();
        r.clone().flat_map(|i| r.clone().map(move |j| (i, j))).collect()
    }

    /// N_i(x)N_j(y), zero outside the square.
    pub fn function(&self, i: usize, j: usize, x: &[f64]) -> f64 {
        self.cubic.eval(i, x[0]) * self.cubic.eval(j, x[1])
    }

    /// dp for p = N_i(x)N_j(y), through the reduced basis.
    pub fn differential(&self, i: usize, j: usize, x: &[f64]) -> [f64; 2] {
        let d = |k: usize, s: f64| -> f64 { self.cubic.derivative_in_reduced(k).iter().map(|&(m, c)| c * self.quad.eval(m, s)).sum() };
        [d(i, x[0]) * self.cubic.eval(j, x[1]), self.cubic.eval(i, x[0]) * d(j, x[1])]
    }

    /// Sparse row of I(f, α) over one chord: (column, value) pairs, columns unsorted.
    fn row(&self, tracer: &RayTracer, bp: &BundlePoint, with_forms: bool) -> Result<Vec<(usize, f64)>> {
        let path = tracer.trace(bp)?;
        let levels = self.cubic.breakpoints();
        let mut breaks = level_crossings(&path, 0, &levels);
        breaks.extend(level_crossings(&path, 1, &levels));
        let mut acc = std::collections::BTreeMap::<usize, f64>::new();
        for node in path_nodes(&path, &breaks) {
            let (x, y) = (node.x[0], node.x[1]);
            let (Some((cx0, cx)), Some((cy0, cy))) = (self.cubic.eval_nonzero(x), self.cubic.eval_nonzero(y)) else { continue };
            for (a, vx) in cx.iter().enumerate() {
                for (b, vy) in cy.iter().enumerate() {
                    *acc.entry((cx0 + a) * self.n + cy0 + b).or_default() += node.weight * vx * vy;
                }
            }
            if !with_forms {
                continue;
            }
            let (qx0, qx) = self.quad.eval_nonzero(x).unwrap();
            let (qy0, qy) = self.quad.eval_nonzero(y).unwrap();
            for (a, vx) in qx.iter().enumerate() {
                for (b, vy) in cy.iter().enumerate() {
                    *acc.entry(self.dx_index(qx0 + a, cy0 + b)).or_default() += node.weight * vx * vy * node.v[0];
                }
            }
            for (a, vx) in cx.iter().enumerate() {
                for (b, vy) in qy.iter().enumerate() {
                    *acc.entry(self.dy_index(cx0 + a, qy0 + b)).or_default() += node.weight * vx * vy * node.v[1];
                }
            }
        }
        Ok(acc.into_iter().collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub rows: usize,
    pub unknowns: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub sigma_max: f64,
    /// σ_min / σ_max.
    pub min_ratio: f64,
    /// Count of σ < [`KERNEL_TOL`]·σ_max.
    pub kernel_dimension: usize,
    pub gauge_dimension: usize,
    /// Largest ‖k − P_gauge k‖ over unit kernel vectors k.
    pub gauge_residual: f64,
    /// Largest ‖A g‖/(σ_max‖g‖) over the gauge vectors g.
    pub gauge_image: f64,
    /// Smallest σ/σ_max outside the kernel.
    pub smallest_nonkernel_ratio: f64,
}

/// Assembles the forward matrix over `family` and analyses its spectrum.
/// With `with_forms` false only the function block is probed and the gauge is empty.
pub fn injectivity_probe(
    m0: &TransversalMetric,
    basis: &SplineBasis,
    with_forms: bool,
    family: &[BundlePoint],
    step: f64,
) -> Result<SpectrumReport> {
    let unknowns = basis.function_count() + if with_forms { basis.form_count() } else { 0 };
    if family.len() < OVERSAMPLING * unknowns {
        return Err(Error::IllPosedFamily(format!("{} geodesics for {unknowns} unknowns", family.len())));
    }
    let tracer = RayTracer::new(m0, step);
    let rows: Vec<Vec<(usize, f64)>> = family.par_iter().map(|bp| basis.row(&tracer, bp, with_forms)).collect::<Result<_>>()?;
    let mut a = DMatrix::<f64>::zeros(rows.len(), unknowns);
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            a[(r, c)] = v;
        }
    }
    let unsampled = (0..unknowns).filter(|&c| a.column(c).iter().all(|v| *v == 0.0)).count();
    if unsampled > 0 {
        return Err(Error::IllPosedFamily(format!("{unsampled} basis elements are never sampled")));
    }

    // Same singular values and right vectors as A, on a square matrix.
    let r = a.clone().qr().r();
    let svd = r.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..unknowns).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = sv[0];
    let kernel: Vec<usize> = order.iter().copied().filter(|&i| svd.singular_values[i] < KERNEL_TOL * sigma_max).collect();
    let smallest_nonkernel_ratio = sv.iter().rev().find(|&&s| s >= KERNEL_TOL * sigma_max).copied().unwrap_or(0.0) / sigma_max;

    let gauge = if with_forms { basis.gauge_vectors() } else { Vec::new() };
    let (mut gauge_residual, mut gauge_image) = (0.0f64, 0.0f64);
    if !gauge.is_empty() {
        let g = DMatrix::from_fn(unknowns, gauge.len(), |i, j| gauge[j][i]);
        let q = g.clone().qr().q();
        for &k in &kernel {
            let kv = vt.row(k).transpose();
            let proj = &q * (q.transpose() * &kv);
            gauge_residual = gauge_residual.max((kv - proj).norm());
        }
        for col in g.column_iter() {
            gauge_image = gauge_image.max((&a * col).norm() / (sigma_max * col.norm()));
        }
    } else if !kernel.is_empty() {
        gauge_residual = 1.0;
    }

    Ok(SpectrumReport {
        rows: rows.len(),
        unknowns,
        min_ratio: sv[unknowns - 1] / sigma_max,
        singular_values: sv,
        sigma_max,
        kernel_dimension: kernel.len(),
        gauge_dimension: gauge.len(),
        gauge_residual,
        gauge_image,
        smallest_nonkernel_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::line::{fan_beam, RayTracer};
    use num_complex::Complex64;

    #[test]
    fn gauge_vectors_are_differentials() {
        let b = SplineBasis::new(0.7, 7);
        let m0 = TransversalMetric::disk();
        let tr = RayTracer::new(&m0, 0.05);
        let family = fan_beam(&m0, 6, 5).unwrap();
        for g in b.gauge_vectors().iter().step_by(5) {
            for bp in &family {
                let row = b.row(&tr, bp, true).unwrap();
                let v: f64 = row.iter().map(|&(c, x)| x * g[c]).sum();
                assert!(v.abs() <= 1e-12, "{v}");
            }
        }
        // the same chord integral through the generic transform
        let p = |x: &[f64]| b.cubic.eval(3, x[0]) * b.cubic.eval(2, x[1]);
        let bp = &family[7];
        let row = b.row(&tr, bp, false).unwrap();
        let direct: f64 = row.iter().filter(|&&(c, _)| c == 3 * 7 + 2).map(|&(_, v)| v).sum();
        let f = |x: &[f64]| Complex64::new(p(x), 0.0);
        let generic = RayTracer::new(&m0, 0.002).xray(&f, None, bp).unwrap();
        assert!((generic.re - direct).abs() <= 1e-6);
    }

    #[test]
    fn single_geodesic_is_ill_posed() {
        let m0 = TransversalMetric::disk();
        let one = vec![BundlePoint::on_circle(&m0, 0.0, 0.0).unwrap()];
        let b = SplineBasis::inscribed(1.0, 5);
        assert!(matches!(injectivity_probe(&m0, &b, false, &one, 0.05), Err(Error::IllPosedFamily(_))));
    }

    #[test]
    fn small_basis_kernel_is_the_gauge() {
        let m0 = TransversalMetric::disk();
        let b = SplineBasis::inscribed(1.0, 6);
        let family = fan_beam(&m0, 24, 20).unwrap();
        let rep = injectivity_probe(&m0, &b, true, &family, 0.05).unwrap();
        assert_eq!(rep.gauge_dimension, 16);
        assert_eq!(rep.kernel_dimension, rep.gauge_dimension, "{:?}", &rep.singular_values[rep.unknowns - 20..]);
        assert!(rep.gauge_residual < 1e-6);
        assert!(rep.gauge_image < 1e-12);
    }
}
