//! Ray-transform experiments: attenuated moments, potential recovery, spline gauge
//! and the injectivity probe.

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::FamilySpec;
use super::table::Table;
use super::{Context, Outcome};
use crate::error::{Error, Result};
use crate::geodesic::BundlePoint;
use crate::ray::fields::{axial_field, beta, gradient_field, p};
use crate::ray::{
    fan_beam, fourier_profiles, injectivity_probe, moment_with_profiles, random_fan, recover_potential, FieldOnStrip, RayTracer,
    SplineBasis,
};

pub const MOMENT_COLUMNS: [&str; 11] =
    ["experiment", "manifold", "field", "lambda", "chord_id", "x_1", "x_2", "xi_1", "xi_2", "re_value", "im_value"];
const MOMENT_KEY: usize = 5;

pub const SPECTRUM_COLUMNS: [&str; 6] = ["experiment", "manifold", "basis", "index", "sigma", "ratio"];
const SPECTRUM_KEY: usize = 4;

fn unit_disk_check(ctx: &Context) -> Result<()> {
    let m0 = &ctx.manifold.transversal;
    if m0.dim != 2 || m0.radius != 1.0 {
        return Err(Error::InvalidInput("ray experiments run on a unit disk M0".into()));
    }
    Ok(())
}

fn push_sample(ctx: &Context, t: &mut Table, field: &str, lambda: f64, id: usize, bp: &BundlePoint, v: Complex64) {
    t.push(vec![
        ctx.cfg.name.as_str().into(),
        ctx.manifold_name.as_str().into(),
        field.into(),
        lambda.into(),
        id.into(),
        bp.x[0].into(),
        bp.x[1].into(),
        bp.xi[0].into(),
        bp.xi[1].into(),
        v.re.into(),
        v.im.into(),
    ]);
}

/// Deterministic points of [−a, a] × the disk of radius 0.9, on a golden-angle spiral.
fn potential_points(a: f64, count: usize) -> Vec<(f64, [f64; 2])> {
    (0..count)
        .map(|k| {
            let s = (k as f64 + 0.5) / count as f64;
            let r = 0.9 * s.sqrt();
            let phi = 2.399_963_229_728_653 * k as f64;
            (a * (2.0 * s - 1.0), [r * phi.cos(), r * phi.sin()])
        })
        .collect()
}

pub fn ray_moments(ctx: &Context) -> Result<Outcome> {
    unit_disk_check(ctx)?;
    let spec = &ctx.cfg.ray;
    let m = &ctx.manifold;
    let m0 = &m.transversal;
    let mut out = Outcome::new(Table::new(&MOMENT_COLUMNS, MOMENT_KEY));
    let chords = random_fan(m0, spec.chords, ctx.cfg.seed)?;
    let tracer = RayTracer::new(m0, spec.step);
    let fields: [(&str, FieldOnStrip, &str); 2] =
        [("gradient", gradient_field(m, spec.support)?, "gradient_max_moment"), ("control", axial_field(m, spec.support)?, "control_max_moment")];
    for (name, field, metric) in &fields {
        for &lambda in &spec.lambdas {
            let prof = fourier_profiles(field, lambda);
            let values: Vec<Complex64> = chords.par_iter().map(|bp| moment_with_profiles(&tracer, &prof, bp)).collect::<Result<_>>()?;
            for (id, (bp, v)) in chords.iter().zip(&values).enumerate() {
                push_sample(ctx, &mut out.table, name, lambda, id, bp, *v);
                out.metrics.max(metric, v.norm());
            }
        }
    }

    let pot = recover_potential(&fields[0].1)?;
    let mut worst: f64 = 0.0;
    for (x1, xp) in potential_points(spec.support, spec.potential_points) {
        worst = worst.max((pot.eval(x1, &xp) - beta(spec.support, x1).0 * p(&xp).0).abs());
    }
    out.metrics.set("potential_max_error", worst);
    let not_closed = match recover_potential(&fields[1].1) {
        Err(Error::NotClosed(_)) => 1.0,
        Ok(_) => 0.0,
        Err(e) => return Err(e),
    };
    out.metrics.set("control_not_closed", not_closed);
    out.details = serde_json::json!({
        "potential": { "x1_mismatch": pot.x1_mismatch, "transversal_mismatch": pot.transversal_mismatch, "max_error": worst },
    });

    if spec.gauge_chords > 0 {
        let basis = SplineBasis::inscribed(m0.radius, spec.gauge_basis);
        let family = random_fan(m0, spec.gauge_chords, ctx.cfg.seed)?;
        let gauge_tracer = RayTracer::new(m0, spec.gauge_step);
        let kinks = basis.kinks();
        let interior = basis.interior_functions();
        let zero = |_: &[f64]| Complex64::new(0.0, 0.0);
        let per_chord: Vec<f64> = family
            .par_iter()
            .map(|bp| {
                interior.iter().try_fold(0.0f64, |acc, &(i, j)| {
                    let dp = |x: &[f64]| basis.differential(i, j, x).iter().map(|v| Complex64::new(*v, 0.0)).collect::<Vec<_>>();
                    Ok(acc.max(gauge_tracer.xray_split(&zero, Some(&dp), bp, &kinks)?.norm()))
                })
            })
            .collect::<Result<_>>()?;
        for (id, (bp, v)) in family.iter().zip(&per_chord).enumerate() {
            push_sample(ctx, &mut out.table, "spline_gauge_max", 0.0, id, bp, Complex64::new(*v, 0.0));
            out.metrics.max("gauge_max", *v);
        }
    }
    Ok(out)
}

pub fn injectivity(ctx: &Context) -> Result<Outcome> {
    let spec = &ctx.cfg.probe;
    let m0 = &ctx.manifold.transversal;
    if m0.dim != 2 {
        return Err(Error::InvalidInput("the injectivity probe runs on a 2-dimensional M0".into()));
    }
    let family = match spec.family {
        FamilySpec::Fan { points, directions } => fan_beam(m0, points, directions)?,
        FamilySpec::Random { count } => random_fan(m0, count, ctx.cfg.seed)?,
    };
    let basis = SplineBasis::inscribed(m0.radius, spec.basis);
    let mut out = Outcome::new(Table::new(&SPECTRUM_COLUMNS, SPECTRUM_KEY));
    let mut reports = serde_json::Map::new();
    for &with_forms in &spec.with_forms {
        let label = if with_forms { "forms" } else { "functions" };
        let r = injectivity_probe(m0, &basis, with_forms, &family, spec.step)?;
        for (k, &s) in r.singular_values.iter().enumerate() {
            out.table.push(vec![
                ctx.cfg.name.as_str().into(),
                ctx.manifold_name.as_str().into(),
                label.into(),
                k.into(),
                s.into(),
                (s / r.sigma_max).into(),
            ]);
        }
        let metric = |s: &str| format!("{label}_{s}");
        if with_forms {
            out.metrics.set(&metric("kernel_dimension"), r.kernel_dimension as f64);
            out.metrics.set(&metric("gauge_dimension"), r.gauge_dimension as f64);
            out.metrics.set(&metric("kernel_gauge_gap"), (r.kernel_dimension as f64 - r.gauge_dimension as f64).abs());
            out.metrics.set(&metric("gauge_residual"), r.gauge_residual);
            out.metrics.set(&metric("nonkernel_ratio"), r.smallest_nonkernel_ratio);
        } else {
            out.metrics.set(&metric("min_ratio"), r.min_ratio);
            out.metrics.set(&metric("kernel_dimension"), r.kernel_dimension as f64);
        }
        reports.insert(label.into(), serde_json::to_value(&r).map_err(|e| Error::Io(e.to_string()))?);
    }
    out.details = serde_json::Value::Object(reports);
    Ok(out)
}
