//! Log–log regression for convergence slopes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScalingReport {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit in log space.
    pub fit_residual: f64,
}

/// Least-squares fit of log(value) = slope·log(param) + intercept.
pub fn scaling_slope(pairs: &[(f64, f64)]) -> Result<ScalingReport> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(&(p, v)) = pairs.iter().find(|(p, v)| !(*p > 0.0) || !(*v >= 1e-14) || !v.is_finite()) {
        return Err(Error::DegenerateFit(format!("value {v:e} at parameter {p} is not fit-able")));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all parameters coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fit_residual = (xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ScalingReport {
        params: pairs.iter().map(|p| p.0).collect(),
        values: pairs.iter().map(|p| p.1).collect(),
        slope,
        intercept,
        fit_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let hs = [0.2, 0.1, 0.05, 0.025];
        let r = scaling_slope(&hs.map(|h| (h, h * h))).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12);
        let r = scaling_slope(&hs.map(|h: f64| (h, 5.0 * h.powf(2.5)))).unwrap();
        assert!((r.slope - 2.5).abs() < 1e-12);
        assert!((r.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn converged_values_are_degenerate() {
        let pairs = [(0.1, 1e-15), (0.05, 1e-16), (0.025, 1e-17)];
        assert!(matches!(scaling_slope(&pairs), Err(Error::DegenerateFit(_))));
        assert!(scaling_slope(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
    }
}
