//! JSON experiment configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::catalog::{catalog_entry, ManifoldSpec};
use super::metrics::known_metrics;
use crate::boundary::Extrapolation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ResidualScaling,
    Concentration,
    RayMoments,
    InjectivityProbe,
    BoundaryRecovery,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::ResidualScaling,
        ExperimentKind::Concentration,
        ExperimentKind::RayMoments,
        ExperimentKind::InjectivityProbe,
        ExperimentKind::BoundaryRecovery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ResidualScaling => "residual_scaling",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::RayMoments => "ray_moments",
            ExperimentKind::InjectivityProbe => "injectivity_probe",
            ExperimentKind::BoundaryRecovery => "boundary_recovery",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::ResidualScaling => {
                "h-sweep of the conjugated biharmonic residual, H1_scl norms, Riccati, eikonal and transport checks"
            }
            ExperimentKind::Concentration => "scalar, vector and gradient concentration limits of beam pairs over the h-grid",
            ExperimentKind::RayMoments => "attenuated moments of a gradient field and a control field, potential recovery",
            ExperimentKind::InjectivityProbe => "singular spectrum of the discrete X-ray transform on a spline basis",
            ExperimentKind::BoundaryRecovery => "recovery of a boundary vector field from oscillatory probe integrals",
        }
    }
}

/// Catalog name or a full manifold description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ManifoldChoice {
    Catalog(String),
    Spec(ManifoldSpec),
}

/// Beam geodesic from a point of M₀ in the Euclidean direction angle `direction_angle`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeodesicSpec {
    pub start: Vec<f64>,
    pub direction_angle: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_delta_prime")]
    pub delta_prime: f64,
}

fn default_step() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    10.0
}
fn default_delta_prime() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeChoice {
    #[default]
    Type1,
    Type2,
}

impl AmplitudeChoice {
    pub fn name(self) -> &'static str {
        match self {
            AmplitudeChoice::Type1 => "type1",
            AmplitudeChoice::Type2 => "type2",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSpec {
    /// Semiclassical parameters, coarse to fine.
    pub h: Vec<f64>,
    /// Appended to `h` under `--deep`.
    pub deep_h: Vec<f64>,
    pub lambda: f64,
    pub amplitude: AmplitudeChoice,
    /// How many of the finest h also get the direct-mode residual.
    pub cross_checks: usize,
    /// Shell radii of the eikonal fit.
    pub eikonal_radii: Vec<f64>,
    /// x₁ rectangle and lattice spacing of type-2 amplitudes.
    pub type2_x1_range: [f64; 2],
    pub type2_spacing: f64,
}

impl Default for BeamSpec {
    fn default() -> Self {
        BeamSpec {
            h: vec![0.2, 0.1, 0.05, 0.025],
            deep_h: vec![0.0125],
            lambda: 0.0,
            amplitude: AmplitudeChoice::Type1,
            cross_checks: 1,
            eikonal_radii: vec![0.01, 0.02, 0.04, 0.08],
            type2_x1_range: [-0.6, 0.6],
            type2_spacing: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Scalar,
    Vector,
    Gradient,
}

impl LimitKind {
    pub fn name(self) -> &'static str {
        match self {
            LimitKind::Scalar => "scalar",
            LimitKind::Vector => "vector",
            LimitKind::Gradient => "gradient",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ConcentrationSpec {
    pub limits: Vec<LimitKind>,
    /// Slice x₁′ of the scalar and vector limits.
    pub x1_slice: f64,
    /// Half-width of the x₁-support of the gradient test function.
    pub support: f64,
    pub x1_nodes: usize,
}

impl Default for ConcentrationSpec {
    fn default() -> Self {
        ConcentrationSpec { limits: vec![LimitKind::Scalar, LimitKind::Vector, LimitKind::Gradient], x1_slice: 0.0, support: 0.5, x1_nodes: 16 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RaySpec {
    /// Random chords for the moments, drawn with the config seed.
    pub chords: usize,
    pub lambdas: Vec<f64>,
    /// x₁-support half-width of the test fields.
    pub support: f64,
    pub step: f64,
    /// Random chords for the spline-gauge check; 0 skips it.
    pub gauge_chords: usize,
    pub gauge_basis: usize,
    pub gauge_step: f64,
    /// Points at which the recovered potential is compared.
    pub potential_points: usize,
}

impl Default for RaySpec {
    fn default() -> Self {
        RaySpec { chords: 20, lambdas: vec![0.0, 0.5, 1.0], support: 0.8, step: 0.01, gauge_chords: 200, gauge_basis: 15, gauge_step: 0.05, potential_points: 40 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilySpec {
    /// `points` boundary points times `directions` incoming directions.
    Fan { points: usize, directions: usize },
    /// Seeded random chords.
    Random { count: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSpec {
    pub basis: usize,
    pub family: FamilySpec,
    pub step: f64,
    /// Probe the function block alone, then functions and 1-forms.
    pub with_forms: Vec<bool>,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec { basis: 15, family: FamilySpec::Fan { points: 40, directions: 50 }, step: 0.05, with_forms: vec![false, true] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundaryPoint {
    pub x1: f64,
    /// Polar angle on ∂M₀.
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySpec {
    pub points: Vec<BoundaryPoint>,
    /// Constant test field in chart components (tangential, tangential, normal).
    pub field: [f64; 3],
    pub lambdas: Vec<f64>,
    pub taus: Vec<[f64; 2]>,
    pub model: Extrapolation,
    /// Direction of the norm-scaling probe.
    pub norm_tau: [f64; 2],
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec {
            points: vec![BoundaryPoint { x1: 0.0, theta: 0.0 }],
            field: [1.0, 2.0, 3.0],
            lambdas: vec![0.04, 0.02, 0.01],
            taus: vec![[1.0, 0.0], [0.0, 1.0]],
            model: Extrapolation::SqrtLinear,
            norm_tau: [0.0, 1.0],
        }
    }
}

/// Output file names, relative to the output directory unless absolute.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub csv: Option<String>,
    pub json: Option<String>,
}

/// Bound on a named summary metric.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    pub metric: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub manifold: ManifoldChoice,
    /// Empty selects the catalog default geodesic.
    #[serde(default)]
    pub geodesics: Vec<GeodesicSpec>,
    #[serde(default)]
    pub beam: BeamSpec,
    #[serde(default)]
    pub concentration: ConcentrationSpec,
    #[serde(default)]
    pub ray: RaySpec,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Vec<Threshold>,
    /// Free-form notes echoed into the report.
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("experiment name {:?} must be a nonempty file stem", self.name));
        }
        match &self.manifold {
            ManifoldChoice::Catalog(name) => {
                if catalog_entry(name).is_none() {
                    return bad(format!("unknown manifold {name:?}"));
                }
            }
            ManifoldChoice::Spec(spec) => {
                spec.build()?;
            }
        }
        for g in &self.geodesics {
            if !(g.step > 0.0 && g.t_max > 0.0 && g.delta_prime > 0.0) {
                return bad(format!("geodesic {g:?} needs positive step, t_max and delta_prime"));
            }
        }
        if self.beam.h.iter().chain(&self.beam.deep_h).any(|&h| !(h > 0.0 && h < 1.0)) {
            return bad("h values must lie in (0, 1)".into());
        }
        let known = known_metrics(self.kind);
        for t in &self.thresholds {
            if !known.contains(&t.metric.as_str()) {
                return bad(format!("metric {:?} is not reported by {}; known: {known:?}", t.metric, self.kind.name()));
            }
            if t.min.is_none() && t.max.is_none() {
                return bad(format!("threshold on {:?} declares neither min nor max", t.metric));
            }
        }
        Ok(())
    }

    /// h-grid, extended under `deep`.
    pub fn h_grid(&self, deep: bool) -> Vec<f64> {
        let mut h = self.beam.h.clone();
        if deep {
            h.extend(&self.beam.deep_h);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_json(r#"{"name": "r", "kind": "residual_scaling", "manifold": "flat_cylinder"}"#).unwrap();
        assert_eq!(c.beam.h, vec![0.2, 0.1, 0.05, 0.025]);
        assert_eq!(c.h_grid(true).len(), 5);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn unknown_manifold_and_metric_rejected() {
        let e = ExperimentConfig::from_json(r#"{"name": "r", "kind": "ray_moments", "manifold": "torus"}"#).unwrap_err();
        assert!(matches!(e, Error::ConfigInvalid(m) if m.contains("torus")));
        let e = ExperimentConfig::from_json(
            r#"{"name": "r", "kind": "ray_moments", "manifold": "flat_cylinder", "thresholds": [{"metric": "slope", "min": 2}]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, Error::ConfigInvalid(_)));
        let e = ExperimentConfig::from_json(r#"{"name": "r", "kind": "nope", "manifold": "flat_cylinder"}"#).unwrap_err();
        assert!(matches!(e, Error::ConfigInvalid(_)));
    }

    #[test]
    fn inline_manifold_spec() {
        let c = ExperimentConfig::from_json(
            r#"{"name": "r", "kind": "ray_moments", "manifold": {"n": 3, "x1_interval": [-1, 1],
                "transversal": {"kind": "perturbed_disk", "params": {"kappa": 0.1}},
                "conformal": {"kind": "exp_x1", "params": {"rate": 0.2}}}}"#,
        )
        .unwrap();
        assert!(matches!(c.manifold, ManifoldChoice::Spec(_)));
        let e = ExperimentConfig::from_json(
            r#"{"name": "r", "kind": "ray_moments", "manifold": {"n": 3, "x1_interval": [-1, 1],
                "transversal": {"kind": "klein_bottle"}, "conformal": {"kind": "constant"}}}"#,
        )
        .unwrap_err();
        assert!(matches!(e, Error::ConfigInvalid(_)));
    }
}
