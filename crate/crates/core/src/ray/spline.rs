//! Clamped uniform B-splines on an interval and their tensor products.

/// Clamped B-spline basis of degree `degree` with `n` functions on [a, b].
#[derive(Debug, Clone)]
pub struct BSpline {
    pub degree: usize,
    pub knots: Vec<f64>,
}

impl BSpline {
    pub fn clamped(a: f64, b: f64, n: usize, degree: usize) -> Self {
        assert!(n > degree, "need more functions than the degree");
        let cells = n - degree;
        let mut knots = vec![a; degree];
        knots.extend((0..=cells).map(|k| a + (b - a) * k as f64 / cells as f64));
        knots.extend(std::iter::repeat(b).take(degree));
        BSpline { degree, knots }
    }

    /// The degree − 1 basis on the same breakpoints. Its span contains the derivatives.
    pub fn reduced(&self) -> Self {
        assert!(self.degree > 0);
        BSpline { degree: self.degree - 1, knots: self.knots[1..self.knots.len() - 1].to_vec() }
    }

    pub fn len(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Interior breakpoints, endpoints included.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.knots[self.degree..=self.len()].to_vec();
        b.dedup();
        b
    }

    /// Index of the first nonzero function at x and the degree + 1 values from there on.
    /// None outside the domain.
    pub fn eval_nonzero(&self, x: f64) -> Option<(usize, Vec<f64>)> {
        let (a, b) = self.domain();
        if !(x >= a && x <= b) {
            return None;
        }
        let p = self.degree;
        let n = self.len();
        // span k with knots[k] ≤ x < knots[k+1], the last span closed on the right
        let k = if x >= b { n - 1 } else { self.knots.partition_point(|&t| t <= x) - 1 };
        let t = &self.knots;
        let mut vals = vec![0.0; p + 1];
        vals[0] = 1.0;
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        for j in 1..=p {
            left[j] = x - t[k + 1 - j];
            right[j] = t[k + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = vals[r] / (right[r + 1] + left[j - r]);
                vals[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            vals[j] = saved;
        }
        Some((k - p, vals))
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        match self.eval_nonzero(x) {
            Some((first, v)) if i >= first && i <= first + self.degree => v[i - first],
            _ => 0.0,
        }
    }

    /// N_i′ = Σ coef·M_j over the reduced basis M, as (j, coef) pairs.
    pub fn derivative_in_reduced(&self, i: usize) -> Vec<(usize, f64)> {
        let p = self.degree as f64;
        let t = &self.knots;
        let m = self.len() - 1;
        let mut out = Vec::with_capacity(2);
        let d0 = t[i + self.degree] - t[i];
        if d0 > 0.0 && i >= 1 {
            out.push((i - 1, p / d0));
        }
        let d1 = t[i + self.degree + 1] - t[i + 1];
        if d1 > 0.0 && i < m {
            out.push((i, -p / d1));
        }
        out
    }

    /// Functions vanishing at both ends of the domain.
    pub fn interior_indices(&self) -> std::ops::Range<usize> {
        1..self.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_derivative_identity() {
        let s = BSpline::clamped(-0.7, 0.7, 15, 3);
        let r = s.reduced();
        assert_eq!(s.len(), 15);
        assert_eq!(r.len(), 14);
        for k in 0..=200 {
            let x = -0.7 + 1.4 * k as f64 / 200.0;
            let sum: f64 = s.eval_nonzero(x).unwrap().1.iter().sum();
            assert!((sum - 1.0).abs() < 1e-13);
            for i in 0..s.len() {
                if k == 0 || k == 200 {
                    continue;
                }
                let e = 1e-6;
                let (lo, hi) = ((x - e).max(-0.7), (x + e).min(0.7));
                let fd = (s.eval(i, hi) - s.eval(i, lo)) / (hi - lo);
                let exact: f64 = s.derivative_in_reduced(i).iter().map(|&(j, c)| c * r.eval(j, x)).sum();
                assert!((fd - exact).abs() < 1e-4, "i={i} x={x} fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn interior_functions_vanish_at_ends() {
        let s = BSpline::clamped(0.0, 1.0, 9, 3);
        for i in s.interior_indices() {
            assert_eq!(s.eval(i, 0.0), 0.0);
            assert_eq!(s.eval(i, 1.0), 0.0);
        }
        assert_eq!(s.eval(0, 0.0), 1.0);
        assert_eq!(s.eval(8, 1.0), 1.0);
    }
}
