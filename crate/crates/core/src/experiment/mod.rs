//! Config-driven experiments with deterministic CSV rows and a JSON summary.

mod beams;
mod boundary;
mod catalog;
mod config;
mod metrics;
mod table;
mod transform;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use beams::{beam_geometry, BEAM_COLUMNS};
pub use boundary::PROBE_COLUMNS;
pub use catalog::{catalog_entry, CatalogEntry, ComponentSpec, ManifoldSpec, CATALOG};
pub use config::{
    AmplitudeChoice, BeamSpec, BoundaryPoint, BoundarySpec, ConcentrationSpec, ExperimentConfig, ExperimentKind, FamilySpec,
    GeodesicSpec, LimitKind, ManifoldChoice, OutputSpec, ProbeSpec, RaySpec, Threshold,
};
pub use metrics::{evaluate, known_metrics, Metrics, ThresholdOutcome, WALL_SECONDS};
pub use table::{format_float, Cell, FormattedTable, Table};
pub use transform::{MOMENT_COLUMNS, SPECTRUM_COLUMNS};

use crate::error::{Error, Result};
use crate::manifold::CtaManifold;
use crate::numerics::fit::ScalingReport;

/// Resolved inputs shared by the runners.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub manifold: CtaManifold,
    pub manifold_name: String,
    pub deep: bool,
    default_geodesic: GeodesicSpec,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig, deep: bool) -> Result<Self> {
        cfg.validate()?;
        let (spec, default_geodesic) = match &cfg.manifold {
            ManifoldChoice::Catalog(name) => {
                let e = catalog_entry(name).ok_or_else(|| Error::ConfigInvalid(format!("unknown manifold {name:?}")))?;
                ((e.spec)(), (e.default_geodesic)())
            }
            ManifoldChoice::Spec(s) => {
                let r = s.transversal.params.get("radius").copied().unwrap_or(1.0);
                let g = GeodesicSpec { start: vec![-r, 0.0], direction_angle: 0.0, step: 1e-3, t_max: 10.0, delta_prime: 0.3 };
                (s.clone(), g)
            }
        };
        let manifold = spec.build()?;
        Ok(Context { cfg, manifold_name: manifold.name.clone(), manifold, deep, default_geodesic })
    }

    /// Configured geodesics, or the catalog default.
    pub fn geodesics(&self) -> Vec<GeodesicSpec> {
        if self.cfg.geodesics.is_empty() {
            vec![self.default_geodesic.clone()]
        } else {
            self.cfg.geodesics.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SlopeFit {
    pub label: String,
    pub fit: ScalingReport,
}

/// What a runner hands back before thresholds are applied.
pub struct Outcome {
    pub table: Table,
    pub metrics: Metrics,
    pub slopes: Vec<SlopeFit>,
    pub details: serde_json::Value,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Outcome { table, metrics: Metrics::default(), slopes: Vec::new(), details: serde_json::Value::Null }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub kind: ExperimentKind,
    pub manifold: String,
    pub seed: u64,
    pub deep: bool,
    pub config: ExperimentConfig,
    pub table: FormattedTable,
    pub slopes: Vec<SlopeFit>,
    pub metrics: Metrics,
    pub thresholds: Vec<ThresholdOutcome>,
    pub passed: bool,
    pub details: serde_json::Value,
    /// Wall-clock seconds; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
    pub csv_path: Option<PathBuf>,
    pub json_path: Option<PathBuf>,
}

impl ExperimentReport {
    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        self.table.to_csv()
    }

    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.thresholds.iter().filter(|t| !t.passed).map(|t| t.metric.as_str()).collect();
        format!(
            "{} [{} on {}]: {} rows, {}{}",
            self.name,
            self.kind.name(),
            self.manifold,
            self.table.rows.len(),
            if self.passed { "PASS" } else { "FAIL" },
            if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for relative output paths; nothing is written when None.
    pub out_dir: Option<PathBuf>,
    /// Extends the h-grid with the configured deep values.
    pub deep: bool,
}

/// Runs the experiment and applies its thresholds, without touching the file system.
pub fn execute(cfg: &ExperimentConfig, deep: bool) -> Result<ExperimentReport> {
    let ctx = Context::new(cfg, deep)?;
    let start = Instant::now();
    let outcome = match cfg.kind {
        ExperimentKind::ResidualScaling => beams::residual_scaling(&ctx),
        ExperimentKind::Concentration => beams::concentration(&ctx),
        ExperimentKind::RayMoments => transform::ray_moments(&ctx),
        ExperimentKind::InjectivityProbe => transform::injectivity(&ctx),
        ExperimentKind::BoundaryRecovery => boundary::boundary_recovery(&ctx),
    };
    let Outcome { mut table, mut metrics, slopes, details } =
        outcome.map_err(|e| Error::Experiment { experiment: cfg.name.clone(), source: Box::new(e) })?;
    let seconds = start.elapsed().as_secs_f64();
    metrics.set(WALL_SECONDS, seconds);
    table.sort();
    let thresholds = evaluate(&cfg.thresholds, &metrics);
    Ok(ExperimentReport {
        name: cfg.name.clone(),
        kind: cfg.kind,
        manifold: ctx.manifold_name.clone(),
        seed: cfg.seed,
        deep,
        config: cfg.clone(),
        table: table.formatted(),
        slopes,
        metrics,
        passed: thresholds.iter().all(|t| t.passed),
        thresholds,
        details,
        timings: BTreeMap::from([("total".to_string(), seconds)]),
        csv_path: None,
        json_path: None,
    })
}

fn resolve(dir: &Path, name: Option<&String>, default: String) -> PathBuf {
    let p = PathBuf::from(name.cloned().unwrap_or(default));
    if p.is_absolute() {
        p
    } else {
        dir.join(p)
    }
}

/// Runs the experiment and writes `<name>.csv` and `<name>.json` (or the configured paths).
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    let mut report = execute(cfg, opts.deep)?;
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
        let csv_path = resolve(dir, cfg.output.csv.as_ref(), format!("{}.csv", cfg.name));
        let json_path = resolve(dir, cfg.output.json.as_ref(), format!("{}.json", cfg.name));
        std::fs::write(&csv_path, report.csv_bytes()?)?;
        report.csv_path = Some(csv_path);
        report.json_path = Some(json_path.clone());
        let json = serde_json::to_vec_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(&json_path, json)?;
    }
    Ok(report)
}

/// Human-readable catalog of manifolds and experiment kinds.
pub fn list_catalog() -> String {
    let mut s = String::from("manifolds:\n");
    for e in &CATALOG {
        s += &format!("  {:<20} {}\n", e.name, e.description);
    }
    s += "experiments:\n";
    for k in ExperimentKind::ALL {
        s += &format!("  {:<20} {}\n", k.name(), k.description());
    }
    s
}

/// The catalog as JSON, with the metrics each experiment reports.
pub fn catalog_json() -> serde_json::Value {
    let manifolds: Vec<_> = CATALOG
        .iter()
        .map(|e| serde_json::json!({ "name": e.name, "description": e.description, "spec": (e.spec)(), "default_geodesic": (e.default_geodesic)() }))
        .collect();
    let experiments: Vec<_> = ExperimentKind::ALL
        .iter()
        .map(|k| serde_json::json!({ "kind": k.name(), "description": k.description(), "metrics": known_metrics(*k) }))
        .collect();
    serde_json::json!({ "manifolds": manifolds, "experiments": experiments })
}
