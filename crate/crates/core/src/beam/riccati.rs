//! Complex symmetric matrix Riccati equation Ḣ + H² = F.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::cheb::PiecewiseCheb;

/// Piecewise Chebyshev fit tolerance relative to max |H|.
const FIT_TOL: f64 = 1e-11;
const MAX_DEGREE: usize = 48;

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub t0: f64,
    pub ts: Vec<f64>,
    pub h: Vec<DMatrix<Complex64>>,
    pub h0: DMatrix<Complex64>,
    pub source: Vec<DMatrix<f64>>,
    pub fit_residual: f64,
    /// Entry fits, row-major, with their first four derivatives.
    fits: Vec<[PiecewiseCheb; 5]>,
    /// ∫_{t0}^t ½ tr H.
    half_trace: PiecewiseCheb,
    k: usize,
}

fn sq(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    h * h
}

fn to_complex(f: &DMatrix<f64>) -> DMatrix<Complex64> {
    f.map(|v| Complex64::new(v, 0.0))
}

/// Min eigenvalue of Im H.
pub fn min_imag_eig(h: &DMatrix<Complex64>) -> f64 {
    let im = h.map(|z| z.im);
    let sym = 0.5 * (&im + im.transpose());
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Integrates Ḣ = F − H² with RK4 from H(t0) = H0 forward to `b` and backward to `a`
/// on nodes t0 + k·dt, then fits Chebyshev series to every entry.
pub fn solve_riccati(
    source: &(dyn Fn(f64) -> DMatrix<f64> + Sync),
    h0: &DMatrix<Complex64>,
    t0: f64,
    range: (f64, f64),
    dt: f64,
) -> Result<RiccatiSolution> {
    let k = h0.nrows();
    if h0.ncols() != k || (h0 - h0.transpose()).norm() > 1e-14 {
        return Err(Error::InvalidInput("H0 must be square and symmetric".into()));
    }
    let eig0 = min_imag_eig(h0);
    if !(eig0 > 0.0) {
        return Err(Error::RiccatiDegenerate { t: t0, min_eig: eig0 });
    }
    let (a, b) = range;
    let nb = ((t0 - a) / dt).ceil().max(0.0) as usize;
    let nf = ((b - t0) / dt).ceil().max(0.0) as usize;
    let rhs = |t: f64, h: &DMatrix<Complex64>| to_complex(&source(t)) - sq(h);
    let march = |sign: f64, steps: usize| -> Result<Vec<(f64, DMatrix<Complex64>, DMatrix<f64>)>> {
        let mut out = Vec::with_capacity(steps);
        let mut h = h0.clone();
        let mut t = t0;
        let step = sign * dt;
        for _ in 0..steps {
            let k1 = rhs(t, &h);
            let k2 = rhs(t + 0.5 * step, &(&h + &k1 * Complex64::new(0.5 * step, 0.0)));
            let k3 = rhs(t + 0.5 * step, &(&h + &k2 * Complex64::new(0.5 * step, 0.0)));
            let k4 = rhs(t + step, &(&h + &k3 * Complex64::new(step, 0.0)));
            h += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(step / 6.0, 0.0);
            h = (&h + h.transpose()) * Complex64::new(0.5, 0.0);
            t += step;
            let e = min_imag_eig(&h);
            if !(e > 1e-12) {
                return Err(Error::RiccatiDegenerate { t, min_eig: e });
            }
            out.push((t, h.clone(), source(t)));
        }
        Ok(out)
    };
    let mut back = march(-1.0, nb)?;
    let fwd = march(1.0, nf)?;
    back.reverse();
    let mut ts = Vec::with_capacity(nb + nf + 1);
    let mut hs = Vec::with_capacity(nb + nf + 1);
    let mut fs = Vec::with_capacity(nb + nf + 1);
    for (t, h, f) in back {
        ts.push(t);
        hs.push(h);
        fs.push(f);
    }
    ts.push(t0);
    hs.push(h0.clone());
    fs.push(source(t0));
    for (t, h, f) in fwd {
        ts.push(t);
        hs.push(h);
        fs.push(f);
    }
    let channels: Vec<Vec<Complex64>> =
        (0..k * k).map(|e| hs.iter().map(|h| h[(e / k, e % k)]).collect()).collect();
    let (entry_fits, fit_residual) = PiecewiseCheb::fit_many(&ts, &channels, FIT_TOL, MAX_DEGREE);
    let fits: Vec<[PiecewiseCheb; 5]> = entry_fits
        .into_iter()
        .map(|s| {
            let d1 = s.derivative();
            let d2 = d1.derivative();
            let d3 = d2.derivative();
            let d4 = d3.derivative();
            [s, d1, d2, d3, d4]
        })
        .collect();
    let mut trace = fits[0][0].map(|c| c * 0.5);
    for d in 1..k {
        trace = trace.add(&fits[d * k + d][0].map(|c| c * 0.5));
    }
    let half_trace = trace.integral(t0, Complex64::new(0.0, 0.0));
    Ok(RiccatiSolution { t0, ts, h: hs, h0: h0.clone(), source: fs, fit_residual, fits, half_trace, k })
}

impl RiccatiSolution {
    pub fn size(&self) -> usize {
        self.k
    }

    pub fn range(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    /// d^order/dt^order H(t) from the Chebyshev representation (order ≤ 4).
    pub fn derivative(&self, t: f64, order: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.k, self.k, |i, j| self.fits[i * self.k + j][order].eval(t))
    }

    pub fn eval(&self, t: f64) -> DMatrix<Complex64> {
        self.derivative(t, 0)
    }

    /// Scalar case (n = 3): H and its first four derivatives.
    pub fn scalar_jet(&self, t: f64) -> [Complex64; 5] {
        debug_assert_eq!(self.k, 1);
        let f = &self.fits[0];
        [f[0].eval(t), f[1].eval(t), f[2].eval(t), f[3].eval(t), f[4].eval(t)]
    }

    /// ∫_{t0}^t ½ tr H(s) ds.
    pub fn half_trace_integral(&self, t: f64) -> Complex64 {
        self.half_trace.eval(t)
    }

    pub fn half_trace_series(&self) -> &PiecewiseCheb {
        &self.half_trace
    }

    /// Minimum over samples of the smallest eigenvalue of Im H.
    pub fn min_imag_eig(&self) -> f64 {
        self.h.iter().map(min_imag_eig).fold(f64::INFINITY, f64::min)
    }

    pub fn symmetry_error(&self) -> f64 {
        self.h.iter().map(|h| (h - h.transpose()).norm()).fold(0.0, f64::max)
    }

    /// max_t |det Im H(t) − det Im H(t0)·e^{−2∫ tr Re H}| / det Im H(t).
    pub fn determinant_identity_error(&self) -> f64 {
        let det0 = self.h0.map(|z| z.im).determinant();
        self.ts
            .iter()
            .zip(&self.h)
            .map(|(&t, h)| {
                let lhs = h.map(|z| z.im).determinant();
                let rhs = det0 * (-4.0 * self.half_trace_integral(t).re).exp();
                ((lhs - rhs) / lhs).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Residual of Ḣ + H² − F at the samples, using the fitted derivative.
    pub fn equation_residual(&self) -> f64 {
        self.ts
            .iter()
            .zip(&self.h)
            .zip(&self.source)
            .map(|((&t, h), f)| (self.derivative(t, 1) + h * h - to_complex(f)).norm())
            .fold(0.0, f64::max)
    }

    /// Copy with H replaced by H + shift·I; used by negative controls.
    pub fn shifted(&self, shift: Complex64) -> Self {
        let mut out = self.clone();
        for h in &mut out.h {
            for d in 0..self.k {
                h[(d, d)] += shift;
            }
        }
        for d in 0..self.k {
            for piece in &mut out.fits[d * self.k + d][0].pieces {
                piece.coeffs[0] += shift;
            }
        }
        let mut trace = out.fits[0][0].map(|c| c * 0.5);
        for d in 1..self.k {
            trace = trace.add(&out.fits[d * self.k + d][0].map(|c| c * 0.5));
        }
        out.half_trace = trace.integral(self.t0, Complex64::new(0.0, 0.0));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(z: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, z)
    }

    #[test]
    fn flat_closed_form() {
        let i = Complex64::new(0.0, 1.0);
        let sol = solve_riccati(&|_| DMatrix::zeros(1, 1), &scalar(i), 0.0, (-0.2, 2.2), 0.005).unwrap();
        for &t in &[-0.2, 0.0, 0.3, 1.0, 1.7, 2.2] {
            let want = Complex64::new(t, 1.0) / (1.0 + t * t);
            assert!((sol.eval(t)[(0, 0)] - want).norm() < 1e-8, "t={t}");
        }
        assert!((sol.eval(1.0)[(0, 0)] - Complex64::new(0.5, 0.5)).norm() < 1e-8);
        // det Im H(1) = 1/2 = e^{−2∫₀¹ s/(1+s²) ds}
        assert!((sol.eval(1.0)[(0, 0)].im - 0.5).abs() < 1e-8);
        assert!(((-4.0 * sol.half_trace_integral(1.0).re).exp() - 0.5).abs() < 1e-8);
        assert!(sol.determinant_identity_error() < 1e-6);
        assert!(sol.equation_residual() < 1e-7);
    }

    #[test]
    fn sphere_source_keeps_h_constant() {
        let i = Complex64::new(0.0, 1.0);
        let coarse = solve_riccati(&|_| DMatrix::from_element(1, 1, -1.0), &scalar(i), 0.0, (-0.5, 3.0), 0.01).unwrap();
        let fine = solve_riccati(&|_| DMatrix::from_element(1, 1, -1.0), &scalar(i), 0.0, (-0.5, 3.0), 0.001).unwrap();
        for &t in &[-0.5, 1.0, 2.9] {
            assert!((coarse.eval(t)[(0, 0)] - fine.eval(t)[(0, 0)]).norm() < 1e-8);
            assert!((fine.eval(t)[(0, 0)] - i).norm() < 1e-10);
        }
    }

    #[test]
    fn matrix_case_invariants() {
        let h0 = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.1, 1.0),
            Complex64::new(0.2, 0.3),
            Complex64::new(0.2, 0.3),
            Complex64::new(-0.1, 0.8),
        ]);
        let f = |t: f64| DMatrix::from_row_slice(2, 2, &[-0.3 * t.cos(), 0.1, 0.1, -0.2]);
        let sol = solve_riccati(&f, &h0, 0.0, (-0.3, 2.5), 0.005).unwrap();
        assert!(sol.symmetry_error() <= 1e-10);
        assert!(sol.min_imag_eig() > 0.0);
        assert!(sol.determinant_identity_error() < 1e-6);
    }

    #[test]
    fn non_positive_initial_imaginary_part_rejected() {
        let h0 = scalar(Complex64::new(1.0, -0.5));
        assert!(matches!(
            solve_riccati(&|_| DMatrix::zeros(1, 1), &h0, 0.0, (0.0, 1.0), 0.01),
            Err(Error::RiccatiDegenerate { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn determinant_identity_holds(re in -1.0f64..1.0, im in 0.2f64..3.0, f in -1.5f64..0.5) {
            let sol = solve_riccati(&move |t: f64| DMatrix::from_element(1, 1, f * (1.0 + 0.3 * t.sin())), &scalar(Complex64::new(re, im)), 0.0, (-0.2, 2.2), 0.005).unwrap();
            prop_assert!(sol.determinant_identity_error() < 1e-6);
            prop_assert!(sol.min_imag_eig() > 0.0);
        }
    }
}
