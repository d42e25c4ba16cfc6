//! Open covers of [−2ε, L + 2ε] separating self-intersection times, with a smooth
//! partition of unity.

use super::GeodesicPath;
use crate::error::{Error, Result};
use crate::numerics::bump::{smoothstep, smoothstep_deriv};

#[derive(Debug, Clone)]
pub struct Cover {
    /// Open intervals (a_j, b_j); only neighbours overlap.
    pub intervals: Vec<(f64, f64)>,
    /// Split points s_j between consecutive intervals.
    pub splits: Vec<f64>,
    pub margin: f64,
}

impl Cover {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    fn rise(&self, j: usize, t: f64) -> f64 {
        // transition of width 2μ centred at the split s_j
        smoothstep((t - self.splits[j] + self.margin) / (2.0 * self.margin))
    }

    /// χ_j(t); the χ_j sum to one on the whole line.
    pub fn cutoff(&self, j: usize, t: f64) -> f64 {
        let n = self.intervals.len();
        let up = if j == 0 { 1.0 } else { self.rise(j - 1, t) };
        let down = if j + 1 == n { 0.0 } else { self.rise(j, t) };
        up - down
    }

    /// k-th derivative of χ_j at t.
    pub fn cutoff_deriv(&self, j: usize, t: f64, k: usize) -> f64 {
        if k == 0 {
            return self.cutoff(j, t);
        }
        let w = 2.0 * self.margin;
        let rise = |i: usize| smoothstep_deriv((t - self.splits[i] + self.margin) / w, k) / w.powi(k as i32);
        let n = self.intervals.len();
        let up = if j == 0 { 0.0 } else { rise(j - 1) };
        let down = if j + 1 == n { 0.0 } else { rise(j) };
        up - down
    }

    /// Index of the interval whose core contains `t`.
    pub fn owner(&self, t: f64) -> usize {
        self.splits.iter().take_while(|&&s| s <= t).count()
    }
}

/// Cover of the extended parameter range; every self-intersection time lies in exactly one interval.
pub fn build_cover(path: &GeodesicPath, delta_prime: f64) -> Result<Cover> {
    let l = path.exit_time;
    let eps = 0.05 * l;
    let margin = (0.25 * delta_prime).min(0.05 * l);
    let mut times: Vec<f64> = path.self_intersections.iter().flat_map(|s| [s.t1, s.t2]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for w in times.windows(2) {
        if w[1] - w[0] < 4.0 * margin {
            return Err(Error::CoverInfeasible(w[0], w[1]));
        }
    }
    let splits: Vec<f64> = times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut intervals = Vec::with_capacity(splits.len() + 1);
    let mut a = -2.0 * eps;
    for &s in &splits {
        intervals.push((a, s + margin));
        a = s - margin;
    }
    intervals.push((a, l + 2.0 * eps));
    Ok(Cover { intervals, splits, margin })
}
