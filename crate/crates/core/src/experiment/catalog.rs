//! Manifold descriptions and the built-in catalog.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::GeodesicSpec;
use crate::error::{Error, Result};
use crate::manifold::{ConformalFactor, CtaManifold, TransversalMetric, TransversalModel};

/// A model kind with numeric parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ComponentSpec {
    fn new(kind: &str, params: &[(&str, f64)]) -> Self {
        ComponentSpec { kind: kind.into(), params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect() }
    }

    fn param(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.params.get(key).copied().unwrap_or(default);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ConfigInvalid(format!("{}.{key} = {v} is not finite", self.kind)))
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::ConfigInvalid(format!("{} takes no parameter {k:?}", self.kind))),
            None => Ok(()),
        }
    }
}

/// J × M₀ with g = c(e ⊕ g₀), M₀ a ball in ℝ^{n−1}.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    pub x1_interval: [f64; 2],
    /// disk, perturbed_disk {kappa}, sphere_patch {curvature}; all take `radius`.
    pub transversal: ComponentSpec,
    /// constant {value}, exp_x1 {rate}, radial {kappa}.
    pub conformal: ComponentSpec,
    #[serde(default)]
    pub fd_step: Option<f64>,
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<CtaManifold> {
        if self.n < 3 {
            return Err(Error::ConfigInvalid(format!("n = {} is below 3", self.n)));
        }
        let t = &self.transversal;
        let radius = t.param("radius", 1.0)?;
        if !(radius > 0.0) {
            return Err(Error::ConfigInvalid(format!("radius {radius} must be positive")));
        }
        let model = match t.kind.as_str() {
            "disk" => {
                t.check_keys(&["radius"])?;
                TransversalModel::Euclidean
            }
            "perturbed_disk" => {
                t.check_keys(&["radius", "kappa"])?;
                TransversalModel::Perturbed { kappa: t.param("kappa", 0.2)? }
            }
            "sphere_patch" => {
                t.check_keys(&["radius", "curvature"])?;
                TransversalModel::SpherePatch { curvature: t.param("curvature", 0.5)? }
            }
            other => return Err(Error::ConfigInvalid(format!("unknown transversal kind {other:?}"))),
        };
        let c = &self.conformal;
        let conformal = match c.kind.as_str() {
            "constant" => {
                c.check_keys(&["value"])?;
                let value = c.param("value", 1.0)?;
                if !(value > 0.0) {
                    return Err(Error::ConfigInvalid(format!("conformal constant {value} must be positive")));
                }
                ConformalFactor::Constant { value }
            }
            "exp_x1" => {
                c.check_keys(&["rate"])?;
                ConformalFactor::ExpX1 { rate: c.param("rate", 0.3)? }
            }
            "radial" => {
                c.check_keys(&["kappa"])?;
                let kappa = c.param("kappa", 0.3)?;
                if 1.0 + kappa.min(0.0) * radius * radius <= 0.0 {
                    return Err(Error::ConfigInvalid(format!("radial kappa {kappa} makes c vanish on M0")));
                }
                ConformalFactor::Radial { kappa }
            }
            other => return Err(Error::ConfigInvalid(format!("unknown conformal kind {other:?}"))),
        };
        let mut m0 = TransversalMetric::new(self.n - 1, radius, model);
        if let Some(step) = self.fd_step {
            if !(step > 0.0) {
                return Err(Error::ConfigInvalid(format!("fd_step {step} must be positive")));
            }
            m0.fd_step = step;
        }
        CtaManifold::new(self.name.as_deref().unwrap_or("custom"), self.x1_interval, m0, conformal)
    }
}

pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: fn() -> ManifoldSpec,
    pub default_geodesic: fn() -> GeodesicSpec,
}

fn cylinder(name: &str, conformal: ComponentSpec) -> ManifoldSpec {
    ManifoldSpec {
        name: Some(name.into()),
        n: 3,
        x1_interval: [-1.0, 1.0],
        transversal: ComponentSpec::new("disk", &[]),
        conformal,
        fd_step: None,
    }
}

/// Diameter of the unit disk from (−1, 0). The flat Fermi chart is global, so the
/// tube may be wide.
fn diameter() -> GeodesicSpec {
    GeodesicSpec { start: vec![-1.0, 0.0], direction_angle: 0.0, step: 1e-3, t_max: 10.0, delta_prime: 8.0 }
}

/// Off-center chord entering at polar angle 2.5, tilted 0.4 from the inward normal.
fn tilted_chord() -> GeodesicSpec {
    let theta: f64 = 2.5;
    GeodesicSpec {
        start: vec![theta.cos(), theta.sin()],
        direction_angle: theta + PI + 0.4,
        step: 1e-3,
        t_max: 10.0,
        delta_prime: 0.3,
    }
}

pub const CATALOG: [CatalogEntry; 4] = [
    CatalogEntry {
        name: "flat_cylinder",
        description: "[-1, 1] x unit disk, c = 1",
        spec: || cylinder("flat_cylinder", ComponentSpec::new("constant", &[("value", 1.0)])),
        default_geodesic: diameter,
    },
    CatalogEntry {
        name: "conformal_cylinder",
        description: "[-1, 1] x unit disk, c = exp(0.3 x1)",
        spec: || cylinder("conformal_cylinder", ComponentSpec::new("exp_x1", &[("rate", 0.3)])),
        default_geodesic: diameter,
    },
    CatalogEntry {
        name: "perturbed_disk",
        description: "[-1, 1] x unit disk with g0 = (1 + 0.2|x'|^2) I, c = 1 + 0.3|x'|^2",
        spec: || ManifoldSpec {
            name: Some("perturbed_disk".into()),
            n: 3,
            x1_interval: [-1.0, 1.0],
            transversal: ComponentSpec::new("perturbed_disk", &[("kappa", 0.2)]),
            conformal: ComponentSpec::new("radial", &[("kappa", 0.3)]),
            fd_step: None,
        },
        default_geodesic: tilted_chord,
    },
    CatalogEntry {
        name: "sphere_patch",
        description: "[-1, 1] x stereographic patch of curvature 0.5 on the unit disk, c = 1",
        spec: || ManifoldSpec {
            name: Some("sphere_patch".into()),
            n: 3,
            x1_interval: [-1.0, 1.0],
            transversal: ComponentSpec::new("sphere_patch", &[("curvature", 0.5)]),
            conformal: ComponentSpec::new("constant", &[("value", 1.0)]),
            fd_step: None,
        },
        default_geodesic: tilted_chord,
    },
];

pub fn catalog_entry(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_builds() {
        for e in &CATALOG {
            let m = (e.spec)().build().unwrap();
            assert_eq!(m.name, e.name);
            assert_eq!(m.n(), 3);
        }
        let m = catalog_entry("conformal_cylinder").unwrap();
        assert!(((m.spec)().build().unwrap().c(1.0, &[0.0, 0.0]) - 0.3f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn unknown_parameter_rejected() {
        let mut s = (CATALOG[0].spec)();
        s.conformal.params.insert("rate".into(), 1.0);
        assert!(matches!(s.build(), Err(Error::ConfigInvalid(_))));
    }
}
