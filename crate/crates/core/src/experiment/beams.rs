//! Residual-scaling and concentration experiments over the h-grid.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{AmplitudeChoice, GeodesicSpec, LimitKind};
use super::table::Table;
use super::{Context, Outcome, SlopeFit};
use crate::beam::{
    assemble_beam_v, assemble_beam_w, normalize_pair, solve_amplitude_type1, solve_amplitude_type2, solve_amplitude_w,
    transport_residual, AmplitudeProfile, BeamGeometry, GaussianBeam,
};
use crate::error::Result;
use crate::geodesic::{trace_geodesic, BundlePoint};
use crate::manifold::CtaManifold;
use crate::numerics::bump::poly_bump;
use crate::residual::{
    concentration_gradient, concentration_scalar, concentration_vector, conjugated_residual, cross_checked_residual,
    eikonal_residual, h1scl_norm, scaling_slope, ConcentrationReport, GridOptions, ResidualMode, TubeGrid,
};

pub const BEAM_COLUMNS: [&str; 10] =
    ["experiment", "manifold", "geodesic_id", "amplitude_kind", "h", "lambda", "quantity", "value", "rhs_value", "rel_error"];
const BEAM_KEY: usize = 7;

/// Grid of the first-type transport check.
const TRANSPORT_GRID: (usize, usize) = (41, 121);

pub fn beam_geometry(m: &CtaManifold, g: &GeodesicSpec) -> Result<Arc<BeamGeometry>> {
    let m0 = &m.transversal;
    let xi: Vec<f64> = if m0.dim == 2 {
        vec![g.direction_angle.cos(), g.direction_angle.sin()]
    } else {
        let mut v = vec![0.0; m0.dim];
        v[0] = g.direction_angle.cos();
        v[1] = g.direction_angle.sin();
        v
    };
    let bp = BundlePoint::new(m0, &g.start, &xi)?;
    let path = trace_geodesic(m0, &bp, g.step, g.t_max)?;
    Ok(Arc::new(BeamGeometry::new(m, &path, g.delta_prime, &BeamGeometry::isotropic_h0(m.n() - 2))?))
}

fn first_amplitude(ctx: &Context, geo: &Arc<BeamGeometry>, choice: AmplitudeChoice) -> Result<AmplitudeProfile> {
    let zero = Complex64::new(0.0, 0.0);
    let b = &ctx.cfg.beam;
    match choice {
        AmplitudeChoice::Type1 => Ok(solve_amplitude_type1(geo, zero)),
        AmplitudeChoice::Type2 => solve_amplitude_type2(geo, zero, (b.type2_x1_range[0], b.type2_x1_range[1]), b.type2_spacing),
    }
}

struct Row<'a> {
    geodesic: usize,
    kind: &'a str,
    h: Option<f64>,
    quantity: String,
    value: f64,
    rhs: Option<f64>,
    rel: Option<f64>,
}

fn push(ctx: &Context, t: &mut Table, lambda: f64, r: Row) {
    t.push(vec![
        ctx.cfg.name.as_str().into(),
        ctx.manifold_name.as_str().into(),
        r.geodesic.into(),
        r.kind.into(),
        r.h.into(),
        lambda.into(),
        r.quantity.into(),
        r.value.into(),
        r.rhs.into(),
        r.rel.into(),
    ]);
}

struct HSample {
    h: f64,
    expansion: f64,
    direct: Option<(f64, f64)>,
    h1_v: f64,
    h1_w: f64,
}

fn ratio(vals: &[f64]) -> f64 {
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(l, u), &v| (l.min(v), u.max(v)));
    hi / lo
}

pub fn residual_scaling(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let hs = cfg.h_grid(ctx.deep);
    let lambda = cfg.beam.lambda;
    let x1 = (ctx.manifold.x1_interval[0], ctx.manifold.x1_interval[1]);
    let mut out = Outcome::new(Table::new(&BEAM_COLUMNS, BEAM_KEY));
    let cross_from = hs.len().saturating_sub(cfg.beam.cross_checks);
    let kind = cfg.beam.amplitude.name();

    for (id, g) in ctx.geodesics().iter().enumerate() {
        let geo = beam_geometry(&ctx.manifold, g)?;
        let zero = Complex64::new(0.0, 0.0);
        let a = first_amplitude(ctx, &geo, cfg.beam.amplitude)?;
        let b = solve_amplitude_w(&geo, zero);
        let samples: Vec<HSample> = hs
            .par_iter()
            .enumerate()
            .map(|(k, &h)| {
                let v = assemble_beam_v(std::slice::from_ref(&a), h, lambda, g.delta_prime)?;
                let w = assemble_beam_w(std::slice::from_ref(&b), h, lambda, g.delta_prime)?;
                let grid = TubeGrid::for_beam(&v, &GridOptions::riemannian(x1))?;
                let (expansion, direct) = if k >= cross_from {
                    let (e, d, rel) = cross_checked_residual(&v, &grid)?;
                    (e.l2, Some((d.l2, rel)))
                } else {
                    (conjugated_residual(&v, &grid, ResidualMode::Expansion)?.l2, None)
                };
                let h1_v = h1scl_norm(&|q: [f64; 3]| v.eval(q[0], q[1], &[q[2]]), &grid, h);
                let h1_w = h1scl_norm(&|q: [f64; 3]| w.eval(q[0], q[1], &[q[2]]), &grid, h);
                Ok(HSample { h, expansion, direct, h1_v, h1_w })
            })
            .collect::<Result<_>>()?;

        for s in &samples {
            let row = |quantity: &str, value, rhs, rel| Row { geodesic: id, kind, h: Some(s.h), quantity: quantity.into(), value, rhs, rel };
            push(ctx, &mut out.table, lambda, row("residual_l2_expansion", s.expansion, None, None));
            if let Some((d, rel)) = s.direct {
                push(ctx, &mut out.table, lambda, row("residual_l2_direct", d, Some(s.expansion), Some(rel)));
                out.metrics.max("mode_mismatch", rel);
            }
            push(ctx, &mut out.table, lambda, row("h1scl_v", s.h1_v, None, None));
            push(ctx, &mut out.table, lambda, Row { kind: "w_side", ..row("h1scl_w", s.h1_w, None, None) });
        }
        let non_monotone = samples.windows(2).filter(|w| !(w[1].expansion < w[0].expansion)).count();
        out.metrics.add("residual_non_monotone", non_monotone as f64);
        let fit = scaling_slope(&samples.iter().map(|s| (s.h, s.expansion)).collect::<Vec<_>>())?;
        out.metrics.min("residual_slope", fit.slope);
        out.slopes.push(SlopeFit { label: format!("geodesic {id}: residual_l2_expansion vs h"), fit });
        out.metrics.max("h1scl_ratio_v", ratio(&samples.iter().map(|s| s.h1_v).collect::<Vec<_>>()));
        out.metrics.max("h1scl_ratio_w", ratio(&samples.iter().map(|s| s.h1_w).collect::<Vec<_>>()));

        let det = geo.riccati.determinant_identity_error();
        let eig = geo.riccati.min_imag_eig();
        out.metrics.max("riccati_determinant_error", det);
        out.metrics.min("riccati_min_imag_eig", eig);
        let v = assemble_beam_v(std::slice::from_ref(&a), hs[0], lambda, g.delta_prime)?;
        let eik = eikonal_residual(&v, &cfg.beam.eikonal_radii)?;
        out.metrics.min("eikonal_slope", eik.slope);
        let transport = match cfg.beam.amplitude {
            AmplitudeChoice::Type1 => transport_residual(&a, (-0.5, 0.5), TRANSPORT_GRID.0, TRANSPORT_GRID.1),
            AmplitudeChoice::Type2 => transport_residual(&a, (-0.5, 0.5), 0, 0),
        };
        out.metrics.max("transport_residual", transport);
        for (q, value) in [
            ("riccati_determinant_error", det),
            ("riccati_min_imag_eig", eig),
            ("eikonal_slope", eik.slope),
            ("transport_residual", transport),
        ] {
            push(ctx, &mut out.table, lambda, Row { geodesic: id, kind, h: None, quantity: q.into(), value, rhs: None, rel: None });
        }
        out.slopes.push(SlopeFit { label: format!("geodesic {id}: eikonal defect vs shell radius"), fit: eik });
    }
    Ok(out)
}

fn beam_pairs(
    geo: &Arc<BeamGeometry>,
    a: &AmplitudeProfile,
    hs: &[f64],
    lambda: f64,
    delta_prime: f64,
) -> Result<Vec<(GaussianBeam, GaussianBeam)>> {
    let (a, b) = normalize_pair(a, &solve_amplitude_w(geo, Complex64::new(0.0, 0.0)), 0.0);
    hs.iter()
        .map(|&h| Ok((assemble_beam_v(std::slice::from_ref(&a), h, lambda, delta_prime)?, assemble_beam_w(std::slice::from_ref(&b), h, lambda, delta_prime)?)))
        .collect()
}

pub fn concentration(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let spec = &cfg.concentration;
    let hs = cfg.h_grid(ctx.deep);
    let lambda = cfg.beam.lambda;
    let radius = ctx.manifold.transversal.radius;
    let mut out = Outcome::new(Table::new(&BEAM_COLUMNS, BEAM_KEY));
    let mut limits = spec.limits.clone();
    limits.sort();
    limits.dedup();

    for (id, g) in ctx.geodesics().iter().enumerate() {
        let geo = beam_geometry(&ctx.manifold, g)?;
        let mut cache: Vec<(AmplitudeChoice, Vec<(GaussianBeam, GaussianBeam)>)> = Vec::new();
        for &limit in &limits {
            // the gradient limit pairs a second-type v_s with w_s
            let choice = if limit == LimitKind::Gradient { AmplitudeChoice::Type2 } else { cfg.beam.amplitude };
            if !cache.iter().any(|(c, _)| *c == choice) {
                let a = first_amplitude(ctx, &geo, choice)?;
                cache.push((choice, beam_pairs(&geo, &a, &hs, lambda, g.delta_prime)?));
            }
            let pairs = &cache.iter().find(|(c, _)| *c == choice).unwrap().1;
            let report = match limit {
                LimitKind::Scalar => concentration_scalar(pairs, &|_, _| 1.0, spec.x1_slice)?,
                LimitKind::Vector => {
                    let (c, s) = (g.direction_angle.cos(), g.direction_angle.sin());
                    concentration_vector(pairs, &move |_, _| [0.0, c, s], &|_, _| 1.0, spec.x1_slice)?
                }
                LimitKind::Gradient => {
                    let w = spec.support;
                    let psi = move |x1: f64, x: &[f64]| {
                        let r2 = x.iter().map(|v| v * v).sum::<f64>() / (radius * radius);
                        poly_bump(x1 * x1 / (w * w)) * (1.0 - r2).max(0.0)
                    };
                    concentration_gradient(pairs, &psi, (-w, w), spec.x1_nodes)?
                }
            };
            record_limit(ctx, &mut out, id, limit, choice, lambda, &report);
        }
    }
    Ok(out)
}

fn record_limit(ctx: &Context, out: &mut Outcome, id: usize, limit: LimitKind, choice: AmplitudeChoice, lambda: f64, r: &ConcentrationReport) {
    let name = limit.name();
    for (k, (&h, lhs)) in r.h.iter().zip(&r.lhs).enumerate() {
        for (part, value, rhs) in [("re", lhs.re, r.rhs.re), ("im", lhs.im, r.rhs.im)] {
            let row = Row {
                geodesic: id,
                kind: choice.name(),
                h: Some(h),
                quantity: format!("{name}_{part}"),
                value,
                rhs: Some(rhs),
                rel: Some(r.errors[k]),
            };
            push(ctx, &mut out.table, lambda, row);
        }
    }
    out.metrics.max(&format!("{name}_final_error"), r.final_error());
    out.metrics.add(&format!("{name}_non_monotone"), if r.monotone() { 0.0 } else { 1.0 });
}
