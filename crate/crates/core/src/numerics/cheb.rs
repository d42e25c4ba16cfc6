//! Complex Chebyshev series on an interval: least-squares fit, evaluation,
//! differentiation and integration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<Complex64>,
}

impl ChebSeries {
    fn to_unit(&self, t: f64) -> f64 {
        (2.0 * t - self.a - self.b) / (self.b - self.a)
    }

    /// Least-squares fit of degree `degree` to samples `(t_k, f_k)`.
    pub fn fit(a: f64, b: f64, ts: &[f64], fs: &[Complex64], degree: usize) -> Self {
        assert_eq!(ts.len(), fs.len());
        assert!(ts.len() > degree);
        let mut m = DMatrix::<f64>::zeros(ts.len(), degree + 1);
        for (i, &t) in ts.iter().enumerate() {
            let u = (2.0 * t - a - b) / (b - a);
            let (mut t0, mut t1) = (1.0, u);
            m[(i, 0)] = 1.0;
            if degree >= 1 {
                m[(i, 1)] = u;
            }
            for k in 2..=degree {
                let t2 = 2.0 * u * t1 - t0;
                m[(i, k)] = t2;
                t0 = t1;
                t1 = t2;
            }
        }
        let qr = m.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let solve = |rhs: DVector<f64>| -> DVector<f64> {
            let qtb = q.transpose() * rhs;
            r.solve_upper_triangular(&qtb).expect("Chebyshev Vandermonde is full rank")
        };
        let re = solve(DVector::from_iterator(fs.len(), fs.iter().map(|z| z.re)));
        let im = solve(DVector::from_iterator(fs.len(), fs.iter().map(|z| z.im)));
        let coeffs = re.iter().zip(im.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect();
        ChebSeries { a, b, coeffs }
    }

    /// Fit with the smallest power-of-two-ish degree whose sample residual is below `tol`.
    pub fn fit_adaptive(a: f64, b: f64, ts: &[f64], fs: &[Complex64], tol: f64, max_degree: usize) -> (Self, f64) {
        let scale = fs.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        let mut degree = 16usize;
        loop {
            let d = degree.min(max_degree).min(ts.len() - 1);
            let s = Self::fit(a, b, ts, fs, d);
            let res = ts
                .iter()
                .zip(fs)
                .map(|(&t, &f)| (s.eval(t) - f).norm())
                .fold(0.0, f64::max);
            if res <= tol * scale || d >= max_degree || d >= ts.len() - 1 {
                return (s, res);
            }
            degree = (degree * 3) / 2;
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let u = self.to_unit(t);
        let mut b1 = Complex64::new(0.0, 0.0);
        let mut b2 = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + b1 * (2.0 * u) - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + b1 * u - b2
    }

    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return ChebSeries { a: self.a, b: self.b, coeffs: vec![Complex64::new(0.0, 0.0)] };
        }
        let mut d = vec![Complex64::new(0.0, 0.0); n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + self.coeffs[k] * (2.0 * k as f64);
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let s = 2.0 / (self.b - self.a);
        ChebSeries { a: self.a, b: self.b, coeffs: d.into_iter().map(|c| c * s).collect() }
    }

    /// Antiderivative taking `value` at `t0`.
    pub fn integral(&self, t0: f64, value: Complex64) -> Self {
        let n = self.coeffs.len();
        let s = 0.5 * (self.b - self.a);
        let c = |k: usize| if k < n { self.coeffs[k] } else { Complex64::new(0.0, 0.0) };
        let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let prev = if k == 1 { c(0) * 2.0 } else { c(k - 1) };
            *slot = (prev - c(k + 1)) / (2.0 * k as f64) * s;
        }
        let mut series = ChebSeries { a: self.a, b: self.b, coeffs: out };
        let shift = value - series.eval(t0);
        series.coeffs[0] += shift;
        series
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ChebSeries { a: self.a, b: self.b, coeffs: self.coeffs.iter().map(|&c| f(c)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |s: &Self, k: usize| s.coeffs.get(k).copied().unwrap_or_default();
        ChebSeries { a: self.a, b: self.b, coeffs: (0..n).map(|k| get(self, k) + get(other, k)).collect() }
    }
}

/// Chebyshev series on consecutive panels sharing break points.
#[derive(Debug, Clone)]
pub struct PiecewiseCheb {
    /// Panel endpoints, increasing; `pieces.len() + 1` entries.
    pub breaks: Vec<f64>,
    pub pieces: Vec<ChebSeries>,
}

/// Panels are never split below this many samples.
const MIN_PANEL_SAMPLES: usize = 24;

impl PiecewiseCheb {
    /// Fits every channel of samples on shared panels, bisecting a panel until each
    /// channel's residual is below `tol` times that channel's max modulus.
    /// Returns the fits and the worst residual.
    pub fn fit_many(ts: &[f64], channels: &[Vec<Complex64>], tol: f64, max_degree: usize) -> (Vec<Self>, f64) {
        let scales: Vec<f64> =
            channels.iter().map(|c| c.iter().map(|z| z.norm()).fold(1.0f64, f64::max)).collect();
        let mut panels: Vec<(usize, usize, Vec<ChebSeries>, f64)> = Vec::new();
        let mut stack = vec![(0usize, ts.len() - 1)];
        while let Some((lo, hi)) = stack.pop() {
            let n = hi - lo + 1;
            let deg = max_degree.min(2 * n / 3).max(1);
            let mut fits = Vec::with_capacity(channels.len());
            let mut ok = true;
            let mut worst: f64 = 0.0;
            for (c, scale) in channels.iter().zip(&scales) {
                let (f, res) = ChebSeries::fit_adaptive(ts[lo], ts[hi], &ts[lo..=hi], &c[lo..=hi], tol, deg);
                ok &= res <= tol * scale;
                worst = worst.max(res / scale);
                fits.push(f);
            }
            if ok || n < 2 * MIN_PANEL_SAMPLES {
                panels.push((lo, hi, fits, worst));
            } else {
                let mid = lo + (hi - lo) / 2;
                stack.push((mid, hi));
                stack.push((lo, mid));
            }
        }
        panels.sort_by_key(|p| p.0);
        let mut breaks = vec![ts[panels[0].0]];
        breaks.extend(panels.iter().map(|p| ts[p.1]));
        let worst = panels.iter().map(|p| p.3).fold(0.0, f64::max);
        let out = (0..channels.len())
            .map(|c| PiecewiseCheb { breaks: breaks.clone(), pieces: panels.iter().map(|p| p.2[c].clone()).collect() })
            .collect();
        (out, worst)
    }

    fn piece(&self, t: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= t);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.pieces[self.piece(t)].eval(t)
    }

    pub fn derivative(&self) -> Self {
        PiecewiseCheb { breaks: self.breaks.clone(), pieces: self.pieces.iter().map(|p| p.derivative()).collect() }
    }

    /// Continuous antiderivative taking `value` at `t0`.
    pub fn integral(&self, t0: f64, value: Complex64) -> Self {
        let j0 = self.piece(t0);
        let mut pieces: Vec<Option<ChebSeries>> = vec![None; self.pieces.len()];
        pieces[j0] = Some(self.pieces[j0].integral(t0, value));
        for j in j0 + 1..self.pieces.len() {
            let left = pieces[j - 1].as_ref().unwrap().eval(self.breaks[j]);
            pieces[j] = Some(self.pieces[j].integral(self.breaks[j], left));
        }
        for j in (0..j0).rev() {
            let right = pieces[j + 1].as_ref().unwrap().eval(self.breaks[j + 1]);
            pieces[j] = Some(self.pieces[j].integral(self.breaks[j + 1], right));
        }
        PiecewiseCheb { breaks: self.breaks.clone(), pieces: pieces.into_iter().map(Option::unwrap).collect() }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Copy) -> Self {
        PiecewiseCheb { breaks: self.breaks.clone(), pieces: self.pieces.iter().map(|p| p.map(f)).collect() }
    }

    /// Sum of two fits on the same panels.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.breaks, other.breaks, "panels must match");
        PiecewiseCheb {
            breaks: self.breaks.clone(),
            pieces: self.pieces.iter().zip(&other.pieces).map(|(a, b)| a.add(b)).collect(),
        }
    }
}
