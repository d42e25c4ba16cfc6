//! Quadrature rules.

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            if n == 1 {
                dp = 1.0;
            }
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|&t| c + r * t).collect(), w.iter().map(|&v| r * v).collect())
}

/// Composite Gauss–Legendre over `panels` equal panels of [a, b].
pub fn composite_gauss(a: f64, b: f64, panels: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(per_panel);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * per_panel);
    let mut ws = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (t, v) in x.iter().zip(&w) {
            xs.push(c + 0.5 * h * t);
            ws.push(0.5 * h * v);
        }
    }
    (xs, ws)
}

/// Trapezoid weights for `n` uniform nodes with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n >= 1 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

/// Composite Simpson weights (n odd); falls back to trapezoid for even n.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    if n < 3 || n % 2 == 0 {
        return trapezoid_weights(n, h);
    }
    (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Trapezoid weights with fourth-order Gregory end corrections (needs n >= 6).
pub fn gregory_weights(n: usize, h: f64) -> Vec<f64> {
    if n < 6 {
        return simpson_weights(n, h);
    }
    let mut w = vec![h; n];
    let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    for (k, e) in ends.iter().enumerate() {
        w[k] = e * h;
        w[n - 1 - k] = e * h;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(t, v)| v * t.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn gregory_is_fourth_order() {
        let f = |x: f64| x.exp();
        let exact = 1f64.exp() - 1.0;
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let w = gregory_weights(n, h);
            (w.iter().enumerate().map(|(i, wi)| wi * f(i as f64 * h)).sum::<f64>() - exact).abs()
        };
        let (e1, e2) = (err(21), err(41));
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }
}
