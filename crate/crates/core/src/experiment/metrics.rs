//! Named summary metrics and threshold evaluation.

use std::collections::BTreeMap;

use serde::Serialize;

use super::config::{ExperimentKind, Threshold};

/// Reported by every experiment.
pub const WALL_SECONDS: &str = "wall_seconds";

pub fn known_metrics(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::ResidualScaling => &[
            WALL_SECONDS,
            "residual_slope",
            "residual_non_monotone",
            "mode_mismatch",
            "h1scl_ratio_v",
            "h1scl_ratio_w",
            "riccati_determinant_error",
            "riccati_min_imag_eig",
            "eikonal_slope",
            "transport_residual",
        ],
        ExperimentKind::Concentration => &[
            WALL_SECONDS,
            "scalar_final_error",
            "scalar_non_monotone",
            "vector_final_error",
            "vector_non_monotone",
            "gradient_final_error",
            "gradient_non_monotone",
        ],
        ExperimentKind::RayMoments => {
            &[WALL_SECONDS, "gradient_max_moment", "control_max_moment", "potential_max_error", "control_not_closed", "gauge_max"]
        }
        ExperimentKind::InjectivityProbe => &[
            WALL_SECONDS,
            "functions_min_ratio",
            "functions_kernel_dimension",
            "forms_kernel_dimension",
            "forms_gauge_dimension",
            "forms_kernel_gauge_gap",
            "forms_gauge_residual",
            "forms_nonkernel_ratio",
        ],
        ExperimentKind::BoundaryRecovery => {
            &[WALL_SECONDS, "max_rel_error", "interior_exponent_error", "boundary_exponent_error", "max_seconds_per_point"]
        }
    }
}

/// Metric values, merged across geodesics or points by min or max.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
#[serde(transparent)]
pub struct Metrics(pub BTreeMap<String, f64>);

impl Metrics {
    pub fn set(&mut self, name: &str, v: f64) {
        self.0.insert(name.into(), v);
    }

    pub fn max(&mut self, name: &str, v: f64) {
        let e = self.0.entry(name.into()).or_insert(v);
        // NaN wins so that a broken measurement cannot pass
        if v.is_nan() || v > *e {
            *e = v;
        }
    }

    pub fn min(&mut self, name: &str, v: f64) {
        let e = self.0.entry(name.into()).or_insert(v);
        if v.is_nan() || v < *e {
            *e = v;
        }
    }

    pub fn add(&mut self, name: &str, v: f64) {
        *self.0.entry(name.into()).or_insert(0.0) += v;
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ThresholdOutcome {
    pub metric: String,
    pub value: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub passed: bool,
}

/// A missing or NaN metric fails its threshold.
pub fn evaluate(thresholds: &[Threshold], metrics: &Metrics) -> Vec<ThresholdOutcome> {
    thresholds
        .iter()
        .map(|t| {
            let value = metrics.get(&t.metric);
            let passed = value.is_some_and(|v| t.min.is_none_or(|m| v >= m) && t.max.is_none_or(|m| v <= m));
            ThresholdOutcome { metric: t.metric.clone(), value, min: t.min, max: t.max, passed }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_fail_on_nan_and_missing() {
        let mut m = Metrics::default();
        m.max("a", 1.0);
        m.max("a", f64::NAN);
        m.max("a", 3.0);
        m.min("b", 2.0);
        m.min("b", 1.5);
        let t = |metric: &str, min: Option<f64>, max: Option<f64>| Threshold { metric: metric.into(), min, max };
        let out = evaluate(&[t("a", None, Some(5.0)), t("b", Some(1.5), Some(1.5)), t("c", Some(0.0), None)], &m);
        assert_eq!(out.iter().map(|o| o.passed).collect::<Vec<_>>(), vec![false, true, false]);
    }
}
