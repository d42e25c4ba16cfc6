//! Smooth transitions, plateau cutoffs and compactly supported bumps.

/// C⁴ smoothstep on [0, 1]: 0 below, 1 above, with four vanishing derivatives at both ends.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(5) * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x))))
    }
}

pub fn smoothstep_d1(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        630.0 * (x * (1.0 - x)).powi(4)
    }
}

pub fn smoothstep_d2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        2520.0 * (x * (1.0 - x)).powi(3) * (1.0 - 2.0 * x)
    }
}

/// k-th derivative of `smoothstep` (k = 0 is the function itself).
pub fn smoothstep_deriv(x: f64, k: usize) -> f64 {
    if k == 0 {
        return smoothstep(x);
    }
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    const COEFFS: [f64; 10] = [0.0, 0.0, 0.0, 0.0, 0.0, 126.0, -420.0, 540.0, -315.0, 70.0];
    let mut acc = 0.0;
    for m in (k..COEFFS.len()).rev() {
        let falling: f64 = (0..k).map(|j| (m - j) as f64).product();
        acc = acc * x + COEFFS[m] * falling;
    }
    acc
}

/// Radial cutoff: 1 on |r| <= 1/4, 0 on |r| >= 1/2.
pub fn plateau_cutoff(r: f64) -> f64 {
    1.0 - smoothstep(4.0 * r.abs() - 1.0)
}

pub fn plateau_cutoff_d1(r: f64) -> f64 {
    -4.0 * r.signum() * smoothstep_d1(4.0 * r.abs() - 1.0)
}

pub fn plateau_cutoff_d2(r: f64) -> f64 {
    -16.0 * smoothstep_d2(4.0 * r.abs() - 1.0)
}

/// k-th derivative of `plateau_cutoff` in r.
pub fn plateau_cutoff_deriv(r: f64, k: usize) -> f64 {
    if k == 0 {
        return plateau_cutoff(r);
    }
    let sign = if r < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    -sign * 4f64.powi(k as i32) * smoothstep_deriv(4.0 * r.abs() - 1.0, k)
}

/// C^∞ bump exp(1 − 1/(1 − x²)) on (−1, 1), equal to 1 at 0.
pub fn smooth_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

pub fn smooth_bump_d1(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - x * x;
        smooth_bump(x) * (-2.0 * x / (q * q))
    }
}

/// ∫_{−1}^{1} smooth_bump.
pub fn smooth_bump_integral() -> f64 {
    let (x, w) = super::quad::composite_gauss(-1.0, 1.0, 64, 8);
    x.iter().zip(&w).map(|(t, v)| v * smooth_bump(*t)).sum()
}

/// Compactly supported polynomial bump (1 − r²)³ for r < 1.
pub fn poly_bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2).powi(3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_derivatives_agree() {
        for &x in &[0.1, 0.37, 0.5, 0.81] {
            assert!((smoothstep_deriv(x, 1) - smoothstep_d1(x)).abs() < 1e-10);
            assert!((smoothstep_deriv(x, 2) - smoothstep_d2(x)).abs() < 1e-9);
            for k in 2..5 {
                let e = 1e-5;
                let fd = (smoothstep_deriv(x + e, k - 1) - smoothstep_deriv(x - e, k - 1)) / (2.0 * e);
                assert!((smoothstep_deriv(x, k) - fd).abs() < 1e-4 * (1.0 + fd.abs()), "k={k}");
            }
            let r = 0.25 + 0.25 * x;
            assert!((plateau_cutoff_deriv(r, 1) - plateau_cutoff_d1(r)).abs() < 1e-9);
            assert!((plateau_cutoff_deriv(-r, 1) - plateau_cutoff_d1(-r)).abs() < 1e-9);
            assert!((plateau_cutoff_deriv(-r, 2) - plateau_cutoff_d2(-r)).abs() < 1e-8);
        }
        // C⁴ at both ends
        for k in 1..5 {
            assert!(smoothstep_deriv(1e-12, k).abs() < 1e-6 && smoothstep_deriv(1.0 - 1e-12, k).abs() < 1e-6);
        }
    }

    #[test]
    fn smoothstep_is_symmetric_and_matches_derivative() {
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            assert!((smoothstep(x) + smoothstep(1.0 - x) - 1.0).abs() < 1e-13);
            let h = 1e-5;
            let fd = (smoothstep(x + h) - smoothstep(x - h)) / (2.0 * h);
            assert!((fd - smoothstep_d1(x)).abs() < 1e-6);
            let fd2 = (smoothstep_d1(x + h) - smoothstep_d1(x - h)) / (2.0 * h);
            assert!((fd2 - smoothstep_d2(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn cutoff_plateau_and_support() {
        assert_eq!(plateau_cutoff(0.0), 1.0);
        assert_eq!(plateau_cutoff(0.25), 1.0);
        assert_eq!(plateau_cutoff(-0.5), 0.0);
        assert_eq!(plateau_cutoff(0.7), 0.0);
        assert!((plateau_cutoff(0.375) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bump_integral_value() {
        // independent value from a dense midpoint sum
        let n = 200_000;
        let s: f64 = (0..n).map(|k| smooth_bump(-1.0 + (k as f64 + 0.5) * 2.0 / n as f64)).sum::<f64>() * 2.0 / n as f64;
        assert!((smooth_bump_integral() - s).abs() < 1e-9);
    }
}
