//! Oscillatory boundary traces v₀ = η(x/λ^{1/2})e^{(i/λ)(τ′·x′ + ix_n)} and the
//! normalized probe integral I₁(λ) = λ^{−(n−1)/2}∫X(v₀)v̄₀ dV_g.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::chart::BoundaryChart;
use crate::error::{Error, Result};
use crate::numerics::bump::poly_bump;
use crate::numerics::fit::{scaling_slope, ScalingReport};
use crate::numerics::quad::composite_gauss;

/// Largest admissible λ.
pub const MAX_LAMBDA: f64 = 0.1;
/// Relative disagreement between the two quadrature levels that flags GridTooCoarse.
pub const RICHARDSON_TOL: f64 = 0.05;
/// Normal cut: e^{−2x_n/λ} is dropped beyond x_n = NORMAL_CUT·λ.
const NORMAL_CUT: f64 = 20.0;

/// η(z) = C(1 − |z|²)³ on the unit ball with ∫η(x′, 0)²dx′ = 1 in two tangential
/// dimensions, so C² = 7/π.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeProfile {
    pub lambda: f64,
    pub tau: [f64; 2],
}

impl ProbeProfile {
    pub fn new(lambda: f64, tau: [f64; 2]) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= MAX_LAMBDA) {
            return Err(Error::InvalidInput(format!("lambda = {lambda} must lie in (0, {MAX_LAMBDA}]")));
        }
        let nrm = (tau[0] * tau[0] + tau[1] * tau[1]).sqrt();
        if !(nrm > 0.0) {
            return Err(Error::InvalidInput("tau must be nonzero".into()));
        }
        Ok(ProbeProfile { lambda, tau: [tau[0] / nrm, tau[1] / nrm] })
    }

    fn scale() -> f64 {
        (7.0 / std::f64::consts::PI).sqrt()
    }

    pub fn eta(z: [f64; 3]) -> f64 {
        Self::scale() * poly_bump(z[0] * z[0] + z[1] * z[1] + z[2] * z[2])
    }

    fn grad_eta(z: [f64; 3]) -> [f64; 3] {
        let q = 1.0 - (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
        if q <= 0.0 {
            return [0.0; 3];
        }
        let k = -6.0 * Self::scale() * q * q;
        [k * z[0], k * z[1], k * z[2]]
    }
}

/// v₀ in the boundary chart of `chart`.
#[derive(Debug, Clone)]
pub struct OscillatoryTrace<'a> {
    pub chart: &'a BoundaryChart,
    pub profile: ProbeProfile,
    /// Quadrature levels 2 and 3; they depend on the chart and λ only.
    grid: Arc<OnceLock<Result<[Vec<ProbeNode>; 2]>>>,
}

pub fn oscillatory_trace(chart: &BoundaryChart, profile: ProbeProfile) -> Result<OscillatoryTrace<'_>> {
    let reach = 2.0 * profile.lambda.sqrt();
    if reach > chart.tangential_extent.min(chart.normal_extent) {
        return Err(Error::SupportEscapesChart(format!(
            "2λ^(1/2) = {reach} exceeds the chart extent {}",
            chart.tangential_extent.min(chart.normal_extent)
        )));
    }
    Ok(OscillatoryTrace { chart, profile, grid: Arc::new(OnceLock::new()) })
}

impl OscillatoryTrace<'_> {
    /// The same trace with another direction τ′, sharing the quadrature grid.
    pub fn with_tau(&self, tau: [f64; 2]) -> Result<Self> {
        let profile = ProbeProfile::new(self.profile.lambda, tau)?;
        Ok(OscillatoryTrace { chart: self.chart, profile, grid: self.grid.clone() })
    }

    fn z(&self, x: [f64; 3]) -> [f64; 3] {
        let r = self.profile.lambda.sqrt();
        [x[0] / r, x[1] / r, x[2] / r]
    }

    fn phase(&self, x: [f64; 3]) -> Complex64 {
        let l = self.profile.lambda;
        let t = self.profile.tau;
        Complex64::new(-x[2] / l, (t[0] * x[0] + t[1] * x[1]) / l).exp()
    }

    /// v₀ at chart coordinates (s₁, s₂, x_n).
    pub fn eval(&self, x: [f64; 3]) -> Complex64 {
        self.phase(x) * ProbeProfile::eta(self.z(x))
    }

    /// Chart gradient (∂_{s₁}, ∂_{s₂}, ∂_{x_n})v₀.
    pub fn gradient(&self, x: [f64; 3]) -> [Complex64; 3] {
        let l = self.profile.lambda;
        let z = self.z(x);
        let (eta, d) = (ProbeProfile::eta(z), ProbeProfile::grad_eta(z));
        let e = self.phase(x);
        let t = self.profile.tau;
        let slot = [Complex64::new(0.0, t[0]), Complex64::new(0.0, t[1]), Complex64::new(-1.0, 0.0)];
        [0, 1, 2].map(|a| e * (d[a] / l.sqrt() + slot[a] * (eta / l)))
    }

    /// Tube quadrature over the support: composite Gauss in s on [−λ^{1/2}, λ^{1/2}]²,
    /// composite Gauss in x_n on [0, min((λ − |s|²)^{1/2}, 20λ)] with panels of width λ/`level`.
    fn nodes(&self, level: usize) -> Result<Vec<ProbeNode>> {
        let l = self.profile.lambda;
        let r = l.sqrt();
        let (ss, ws) = composite_gauss(-r, r, 2 * level, 8);
        let pairs: Vec<(usize, usize)> = (0..ss.len()).flat_map(|i| (0..ss.len()).map(move |j| (i, j))).collect();
        let chunks: Vec<Vec<ProbeNode>> = pairs
            .par_iter()
            .map(|&(i, j)| -> Result<Vec<ProbeNode>> {
                let s = [ss[i], ss[j]];
                let rest = l - s[0] * s[0] - s[1] * s[1];
                if rest <= 0.0 {
                    return Ok(Vec::new());
                }
                let top = rest.sqrt().min(NORMAL_CUT * l);
                let panels = ((top / l) * level as f64).ceil().max(1.0) as usize;
                let (xs, wx) = composite_gauss(0.0, top, panels, 4);
                let jac = self.chart.jacobians(s, &xs)?;
                let mut out = Vec::with_capacity(xs.len());
                for (k, (p, jm)) in jac.iter().enumerate() {
                    let g = self.chart.manifold.metric(p.as_slice())?;
                    let g3 = nalgebra::Matrix3::from_fn(|a, b| g[(a, b)]);
                    let det = (jm.transpose() * g3 * jm).determinant();
                    out.push(ProbeNode { x: [s[0], s[1], xs[k]], weight: ws[i] * ws[j] * wx[k] * det.sqrt() });
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }

    /// Integral on levels 2 and 3, GridTooCoarse when they disagree beyond 5%.
    fn richardson<F: Fn(&ProbeNode) -> Complex64 + Sync>(&self, f: &F) -> Result<Complex64> {
        let grid = self.grid.get_or_init(|| Ok([self.nodes(2)?, self.nodes(3)?])).as_ref().map_err(Clone::clone)?;
        let sum = |nodes: &Vec<ProbeNode>| -> Complex64 { nodes.par_iter().map(|n| f(n) * n.weight).sum() };
        let (coarse, fine) = (sum(&grid[0]), sum(&grid[1]));
        let diff = (fine - coarse).norm();
        if diff > RICHARDSON_TOL * fine.norm() && diff > 1e-12 {
            return Err(Error::GridTooCoarse(format!("probe quadrature levels differ by {diff:e} (value {fine})")));
        }
        Ok(fine)
    }

    /// (‖v₀‖²_{L²(M)}, ‖v₀‖²_{L²(∂M)}).
    pub fn norms_sqr(&self) -> Result<(f64, f64)> {
        let interior = self.richardson(&|n| Complex64::new(self.eval(n.x).norm_sqr(), 0.0))?.re;
        let r = self.profile.lambda.sqrt();
        let (ss, ws) = composite_gauss(-r, r, 6, 8);
        let mut boundary = 0.0;
        for (i, &s0) in ss.iter().enumerate() {
            for (j, &s1) in ss.iter().enumerate() {
                let v = self.eval([s0, s1, 0.0]).norm_sqr();
                if v == 0.0 {
                    continue;
                }
                let (p, jm) = self.chart.jacobians([s0, s1], &[0.0])?[0];
                let g = self.chart.manifold.metric(p.as_slice())?;
                let g3 = nalgebra::Matrix3::from_fn(|a, b| g[(a, b)]);
                let h = jm.transpose() * g3 * jm;
                let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
                boundary += ws[i] * ws[j] * v * det.sqrt();
            }
        }
        Ok((interior, boundary))
    }
}

#[derive(Debug, Clone, Copy)]
struct ProbeNode {
    x: [f64; 3],
    weight: f64,
}

/// Vector field in chart coordinates: (s₁, s₂, x_n) ↦ chart components.
pub type ChartField<'a> = dyn Fn([f64; 3]) -> [f64; 3] + Sync + 'a;

/// I₁(λ) = λ^{−(n−1)/2}∫X(v₀)v̄₀ dV_g.
pub fn probe_integral(trace: &OscillatoryTrace, x: &ChartField) -> Result<Complex64> {
    let l = trace.profile.lambda;
    let raw = trace.richardson(&|n| {
        let xv = x(n.x);
        let g = trace.gradient(n.x);
        let dv: Complex64 = (0..3).map(|a| g[a] * xv[a]).sum();
        dv * trace.eval(n.x).conj()
    })?;
    Ok(raw / l)
}

/// The limit (i/2)X·(τ′, i).
pub fn probe_limit(x0: [f64; 3], tau: [f64; 2]) -> Complex64 {
    Complex64::new(0.0, 0.5) * Complex64::new(x0[0] * tau[0] + x0[1] * tau[1], x0[2])
}

/// Exponents of λ in ‖v₀‖²_{L²(M)} and ‖v₀‖²_{L²(∂M)}.
#[derive(Debug, Clone, Serialize)]
pub struct NormScaling {
    pub interior: ScalingReport,
    pub boundary: ScalingReport,
}

pub fn probe_norm_scaling(chart: &BoundaryChart, lambdas: &[f64], tau: [f64; 2]) -> Result<NormScaling> {
    let mut inner = Vec::new();
    let mut bdry = Vec::new();
    for &l in lambdas {
        let tr = oscillatory_trace(chart, ProbeProfile::new(l, tau)?)?;
        let (a, b) = tr.norms_sqr()?;
        inner.push((l, a));
        bdry.push((l, b));
    }
    Ok(NormScaling { interior: scaling_slope(&inner)?, boundary: scaling_slope(&bdry)? })
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionFit {
    pub tau: [f64; 2],
    pub lambdas: Vec<f64>,
    pub values: Vec<Complex64>,
    /// I₁(0) from the extrapolation fit.
    pub limit: Complex64,
    pub fit_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRecovery {
    pub x0: [f64; 3],
    pub model: Extrapolation,
    pub directions: Vec<DirectionFit>,
    /// Residual of the least-squares solve for X(x₀).
    pub solve_residual: f64,
}

/// Model for the λ → 0 extrapolation of I₁(λ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// I₁(0) + Cλ^{1/2}
    #[default]
    SqrtLinear,
    /// I₁(0) + Cλ^{1/2} + Dλ
    SqrtQuadratic,
}

impl Extrapolation {
    fn columns(self) -> usize {
        match self {
            Self::SqrtLinear => 2,
            Self::SqrtQuadratic => 3,
        }
    }
}

/// Least-squares fit of the model to complex samples, returning (I₁(0), rms residual).
fn fit_limit(model: Extrapolation, lambdas: &[f64], values: &[Complex64]) -> Result<(Complex64, f64)> {
    let k = model.columns();
    if lambdas.len() < k {
        return Err(Error::DegenerateFit(format!("{model:?} needs at least {k} lambda values")));
    }
    let a = DMatrix::from_fn(lambdas.len(), k, |i, j| lambdas[i].sqrt().powi(j as i32));
    let svd = a.clone().svd(true, true);
    let solve = |b: DVector<f64>| svd.solve(&b, 1e-14).map_err(|e| Error::DegenerateFit(e.to_string()));
    let re = solve(DVector::from_iterator(values.len(), values.iter().map(|v| v.re)))?;
    let im = solve(DVector::from_iterator(values.len(), values.iter().map(|v| v.im)))?;
    let pred_re = &a * &re;
    let pred_im = &a * &im;
    let res = values
        .iter()
        .enumerate()
        .map(|(i, v)| (v.re - pred_re[i]).powi(2) + (v.im - pred_im[i]).powi(2))
        .sum::<f64>()
        / values.len() as f64;
    Ok((Complex64::new(re[0], im[0]), res.sqrt()))
}

/// Recovers the chart components of X(x₀) from I₁ over `taus` and decreasing `lambdas`.
/// Each direction gives X′·τ′ = 2 Im I₁(0) and X_n = −2 Re I₁(0).
pub fn recover_boundary_field(
    chart: &BoundaryChart,
    x: &ChartField,
    lambdas: &[f64],
    taus: &[[f64; 2]],
    model: Extrapolation,
) -> Result<BoundaryRecovery> {
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("lambda list must be decreasing".into()));
    }
    let units: Vec<[f64; 2]> = taus.iter().map(|&t| ProbeProfile::new(lambdas[0], t).map(|p| p.tau)).collect::<Result<_>>()?;
    let tmat = DMatrix::from_fn(units.len(), 2, |i, j| units[i][j]);
    let rank = tmat.clone().svd(false, false).rank(1e-8);
    if rank < 2 {
        return Err(Error::SingularDirectionSet { rank, needed: 2 });
    }
    let mut table = vec![Vec::with_capacity(lambdas.len()); units.len()];
    for &l in lambdas {
        let base = oscillatory_trace(chart, ProbeProfile::new(l, units[0])?)?;
        for (k, &tau) in units.iter().enumerate() {
            table[k].push(probe_integral(&base.with_tau(tau)?, x)?);
        }
    }
    let mut directions = Vec::with_capacity(units.len());
    for (&tau, values) in units.iter().zip(table) {
        let (limit, fit_residual) = fit_limit(model, lambdas, &values)?;
        directions.push(DirectionFit { tau, lambdas: lambdas.to_vec(), values, limit, fit_residual });
    }
    // rows: (τ′, 0)·X = 2 Im I₀ and (0, 0, 1)·X = −2 Re I₀
    let k = directions.len();
    let a = DMatrix::from_fn(2 * k, 3, |r, c| {
        let d = &directions[r / 2];
        match (r % 2, c) {
            (0, 0) => d.tau[0],
            (0, 1) => d.tau[1],
            (1, 2) => 1.0,
            _ => 0.0,
        }
    });
    let b = DVector::from_fn(2 * k, |r, _| {
        let l = directions[r / 2].limit;
        if r % 2 == 0 {
            2.0 * l.im
        } else {
            -2.0 * l.re
        }
    });
    let sol = a.clone().svd(true, true).solve(&b, 1e-12).map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let solve_residual = (&a * &sol - &b).norm();
    Ok(BoundaryRecovery { x0: [sol[0], sol[1], sol[2]], model, directions, solve_residual })
}

#[cfg(test)]
mod tests {
    use super::super::chart::build_boundary_chart;
    use super::*;
    use crate::manifold::{ConformalFactor, CtaManifold, TransversalMetric};

    fn flat_chart() -> BoundaryChart {
        let m = CtaManifold::new("flat", [-1.0, 1.0], TransversalMetric::disk(), ConformalFactor::Constant { value: 1.0 }).unwrap();
        build_boundary_chart(&m, 0.0, 0.0).unwrap()
    }

    #[test]
    fn profile_is_normalized_on_the_boundary() {
        let (xs, ws) = composite_gauss(-1.0, 1.0, 8, 8);
        let mut s = 0.0;
        for (i, &a) in xs.iter().enumerate() {
            for (j, &b) in xs.iter().enumerate() {
                s += ws[i] * ws[j] * ProbeProfile::eta([a, b, 0.0]).powi(2);
            }
        }
        assert!((s - 1.0).abs() < 1e-10, "{s}");
    }

    #[test]
    fn trace_values_and_decay() {
        let ch = flat_chart();
        let tr = oscillatory_trace(&ch, ProbeProfile::new(0.04, [1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(tr.eval([0.0; 3]), Complex64::new(ProbeProfile::eta([0.0; 3]), 0.0));
        let x = [0.05, -0.03, 0.02];
        let want = ProbeProfile::eta(tr.z(x)) * (-0.02f64 / 0.04).exp();
        assert!((tr.eval(x).norm() - want).abs() < 1e-14);
        assert!(oscillatory_trace(&ch, ProbeProfile::new(0.1, [1.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn tangential_and_normal_limits() {
        let ch = flat_chart();
        let lambdas = [0.04, 0.02, 0.01];
        let tan = |_: [f64; 3]| [1.0, 0.0, 0.0];
        let nor = |_: [f64; 3]| [0.0, 0.0, 1.0];
        let zero = |_: [f64; 3]| [0.0; 3];
        let mut prev = f64::MAX;
        for &l in &lambdas {
            let tr = oscillatory_trace(&ch, ProbeProfile::new(l, [1.0, 0.0]).unwrap()).unwrap();
            let it = probe_integral(&tr, &tan).unwrap();
            let inn = probe_integral(&tr, &nor).unwrap();
            assert!((it - Complex64::new(0.0, 0.5)).norm() < 0.1, "{it}");
            assert!((inn + 0.5).norm() < 0.1, "{inn}");
            let err = (inn + 0.5).norm();
            assert!(err < prev);
            prev = err;
            assert_eq!(probe_integral(&tr, &zero).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn norm_exponents() {
        let ch = flat_chart();
        let s = probe_norm_scaling(&ch, &[0.04, 0.02, 0.01], [0.0, 1.0]).unwrap();
        assert!((s.interior.slope - 2.0).abs() < 0.1, "{:?}", s.interior);
        assert!((s.boundary.slope - 1.0).abs() < 0.1, "{:?}", s.boundary);
    }

    #[test]
    fn parallel_directions_are_singular() {
        let ch = flat_chart();
        let x = |_: [f64; 3]| [1.0, 2.0, 3.0];
        let r = recover_boundary_field(&ch, &x, &[0.04, 0.02], &[[1.0, 0.0], [2.0, 0.0]], Extrapolation::SqrtLinear);
        assert_eq!(r.unwrap_err(), Error::SingularDirectionSet { rank: 1, needed: 2 });
    }

    #[test]
    fn constant_field_is_recovered() {
        let ch = flat_chart();
        let t = std::time::Instant::now();
        let x = |_: [f64; 3]| [1.0, 2.0, 3.0];
        let lambdas = [0.04, 0.02, 0.01];
        let taus = [[1.0, 0.0], [0.0, 1.0]];
        let rec = recover_boundary_field(&ch, &x, &lambdas, &taus, Extrapolation::SqrtLinear).unwrap();
        assert!(t.elapsed().as_secs() < 60);
        for (got, want) in rec.x0.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() <= 0.05 * want, "{:?}", rec.x0);
        }
        let quad = recover_boundary_field(&ch, &x, &lambdas, &taus, Extrapolation::SqrtQuadratic).unwrap();
        for ((got, lin), want) in quad.x0.iter().zip(rec.x0).zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() <= (lin - want).abs() && (got - want).abs() <= 0.025 * want, "{:?}", quad.x0);
        }
        let tangential = |_: [f64; 3]| [0.6, -0.8, 0.0];
        let rec = recover_boundary_field(&ch, &tangential, &lambdas, &taus, Extrapolation::SqrtLinear).unwrap();
        assert!(rec.x0[2].abs() <= 0.05, "{:?}", rec.x0);
    }
}
