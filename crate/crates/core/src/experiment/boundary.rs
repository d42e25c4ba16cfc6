//! Boundary-recovery experiment: probe integrals of a constant test field in boundary
//! normal coordinates.

use std::time::Instant;

use super::table::Table;
use super::{Context, Outcome, SlopeFit};
use crate::boundary::{build_boundary_chart, probe_norm_scaling, recover_boundary_field};
use crate::error::{Error, Result};

pub const PROBE_COLUMNS: [&str; 7] = ["experiment", "manifold", "x0_id", "tau_index", "lambda", "re_I1", "im_I1"];
const PROBE_KEY: usize = 5;

/// ‖v₀‖² on M scales like λ², on ∂M like λ.
const INTERIOR_EXPONENT: f64 = 2.0;
const BOUNDARY_EXPONENT: f64 = 1.0;

pub fn boundary_recovery(ctx: &Context) -> Result<Outcome> {
    let spec = &ctx.cfg.boundary;
    let want = spec.field;
    let mut out = Outcome::new(Table::new(&PROBE_COLUMNS, PROBE_KEY));
    let mut details = Vec::new();
    for (id, pt) in spec.points.iter().enumerate() {
        let start = Instant::now();
        let chart = build_boundary_chart(&ctx.manifold, pt.x1, pt.theta)?;
        let field = move |_: [f64; 3]| want;
        let rec = recover_boundary_field(&chart, &field, &spec.lambdas, &spec.taus, spec.model)?;
        let seconds = start.elapsed().as_secs_f64();
        for (k, dir) in rec.directions.iter().enumerate() {
            for (&l, v) in dir.lambdas.iter().zip(&dir.values) {
                out.table.push(vec![
                    ctx.cfg.name.as_str().into(),
                    ctx.manifold_name.as_str().into(),
                    id.into(),
                    k.into(),
                    l.into(),
                    v.re.into(),
                    v.im.into(),
                ]);
            }
        }
        for (got, w) in rec.x0.iter().zip(want) {
            let err = if w == 0.0 { got.abs() } else { (got - w).abs() / w.abs() };
            out.metrics.max("max_rel_error", err);
        }
        let norms = probe_norm_scaling(&chart, &spec.lambdas, spec.norm_tau)?;
        out.metrics.max("interior_exponent_error", (norms.interior.slope - INTERIOR_EXPONENT).abs());
        out.metrics.max("boundary_exponent_error", (norms.boundary.slope - BOUNDARY_EXPONENT).abs());
        out.metrics.max("max_seconds_per_point", seconds);
        out.slopes.push(SlopeFit { label: format!("point {id}: interior probe norm squared vs lambda"), fit: norms.interior });
        out.slopes.push(SlopeFit { label: format!("point {id}: boundary probe norm squared vs lambda"), fit: norms.boundary });
        details.push(serde_json::to_value(&rec).map_err(|e| Error::Io(e.to_string()))?);
    }
    out.details = serde_json::json!({ "recoveries": details });
    Ok(out)
}
