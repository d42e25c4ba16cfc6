//! Classical fourth-order Runge–Kutta.

/// One RK4 step of size `h` for y' = f(y).
pub fn rk4_step<F: Fn(&[f64], &mut [f64])>(f: &F, y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(&tmp, &mut k4);
    (0..n).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

/// `steps` equal RK4 steps over a total span `span`.
pub fn rk4_fixed<F: Fn(&[f64], &mut [f64])>(f: &F, y0: &[f64], span: f64, steps: usize) -> Vec<f64> {
    let h = span / steps as f64;
    let mut y = y0.to_vec();
    for _ in 0..steps {
        y = rk4_step(f, &y, h);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        let f = |y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let err = |n: usize| (rk4_fixed(&f, &[1.0, 0.0], 1.0, n)[0] - 1f64.cos()).abs();
        let r = err(20) / err(40);
        assert!(r > 14.0 && r < 18.0, "ratio {r}");
    }
}
