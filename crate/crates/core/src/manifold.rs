//! Geometry g = c(e ⊕ g₀) on J × M₀: metric jets, Laplace–Beltrami, gradients,
//! volume density and the musical isomorphisms.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::fd;

/// Boundary band treated as ∂M₀.
pub const BOUNDARY_BAND: f64 = 1e-12;

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Transversal metric models. The isotropic ones are w(|x′|²)·I with analytic jets.
#[derive(Clone)]
pub enum TransversalModel {
    Euclidean,
    /// w = 1 + κ r²
    Perturbed { kappa: f64 },
    /// w = 4 / (1 + K r²)², constant Gauss curvature K when m = 2
    SpherePatch { curvature: f64 },
    /// Arbitrary callback; derivatives by central differences.
    Custom { name: String, g0: MetricFn },
}

impl fmt::Debug for TransversalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean => write!(f, "Euclidean"),
            Self::Perturbed { kappa } => write!(f, "Perturbed {{ kappa: {kappa} }}"),
            Self::SpherePatch { curvature } => write!(f, "SpherePatch {{ curvature: {curvature} }}"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl TransversalModel {
    /// (w, dw/dr², d²w/d(r²)²) for isotropic models.
    fn isotropic(&self, r2: f64) -> Option<(f64, f64, f64)> {
        match *self {
            Self::Euclidean => Some((1.0, 0.0, 0.0)),
            Self::Perturbed { kappa } => Some((1.0 + kappa * r2, kappa, 0.0)),
            Self::SpherePatch { curvature: k } => {
                let q = 1.0 + k * r2;
                Some((4.0 / (q * q), -8.0 * k / q.powi(3), 24.0 * k * k / q.powi(4)))
            }
            Self::Custom { .. } => None,
        }
    }
}

/// (M₀, g₀) as a ball of radius `radius` in ℝ^m with ρ = (R² − |x′|²)/(2R).
#[derive(Debug, Clone)]
pub struct TransversalMetric {
    pub dim: usize,
    pub radius: f64,
    pub model: TransversalModel,
    /// The metric is evaluable on ρ ≥ −extension (room for the ε-extended geodesic).
    pub extension: f64,
    pub fd_step: f64,
}

impl TransversalMetric {
    pub fn new(dim: usize, radius: f64, model: TransversalModel) -> Self {
        TransversalMetric { dim, radius, model, extension: 0.25 * radius, fd_step: 1e-4 * 2.0 * radius }
    }

    pub fn disk() -> Self {
        Self::new(2, 1.0, TransversalModel::Euclidean)
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.model, TransversalModel::Euclidean)
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn rho(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (self.radius * self.radius - r2) / (2.0 * self.radius)
    }

    pub fn rho_grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| -v / self.radius).collect()
    }

    /// Inside M₀ up to the boundary band.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.rho(x) >= -BOUNDARY_BAND
    }

    pub fn on_boundary(&self, x: &[f64]) -> bool {
        self.rho(x).abs() < BOUNDARY_BAND
    }

    /// Inside the extended domain where g₀ is still defined.
    pub fn in_extended(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.rho(x) >= -self.extension - BOUNDARY_BAND
    }

    pub fn g0(&self, x: &[f64]) -> DMatrix<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match &self.model {
            TransversalModel::Custom { g0, .. } => g0(x),
            m => DMatrix::identity(self.dim, self.dim) * m.isotropic(r2).unwrap().0,
        }
    }

    /// ∂_k g₀ for k = 0..m.
    pub fn dg0(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let m = self.dim;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match &self.model {
            TransversalModel::Custom { g0, .. } => (0..m)
                .map(|k| {
                    let mut alpha = vec![0; m];
                    alpha[k] = 1;
                    DMatrix::from_fn(m, m, |i, j| fd::mixed_partial(&|p: &[f64]| g0(p)[(i, j)], x, &alpha, self.fd_step))
                })
                .collect(),
            model => {
                let (_, w1, _) = model.isotropic(r2).unwrap();
                (0..m).map(|k| DMatrix::identity(m, m) * (2.0 * x[k] * w1)).collect()
            }
        }
    }

    /// ∂_k ∂_l g₀.
    pub fn d2g0(&self, x: &[f64]) -> Vec<Vec<DMatrix<f64>>> {
        let m = self.dim;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match &self.model {
            TransversalModel::Custom { g0, .. } => (0..m)
                .map(|k| {
                    (0..m)
                        .map(|l| {
                            let mut alpha = vec![0; m];
                            alpha[k] += 1;
                            alpha[l] += 1;
                            DMatrix::from_fn(m, m, |i, j| {
                                fd::mixed_partial(&|p: &[f64]| g0(p)[(i, j)], x, &alpha, self.fd_step)
                            })
                        })
                        .collect()
                })
                .collect(),
            model => {
                let (_, w1, w2) = model.isotropic(r2).unwrap();
                (0..m)
                    .map(|k| {
                        (0..m)
                            .map(|l| {
                                let d = if k == l { 2.0 * w1 } else { 0.0 };
                                DMatrix::identity(m, m) * (d + 4.0 * x[k] * x[l] * w2)
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// Christoffel symbols: `gamma[k][(i, j)] = Γ^k_{ij}`.
    pub fn christoffel(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let m = self.dim;
        if self.is_euclidean() {
            return vec![DMatrix::zeros(m, m); m];
        }
        let ginv = self.g0(x).try_inverse().expect("g0 is positive definite");
        let dg = self.dg0(x);
        let lower = |i: usize, j: usize, p: usize| 0.5 * (dg[i][(j, p)] + dg[j][(i, p)] - dg[p][(i, j)]);
        (0..m)
            .map(|k| DMatrix::from_fn(m, m, |i, j| (0..m).map(|p| ginv[(k, p)] * lower(i, j, p)).sum()))
            .collect()
    }

    /// `(Γ, ∂Γ)` with `dgamma[l][k][(i, j)] = ∂_l Γ^k_{ij}`.
    #[allow(clippy::type_complexity)]
    pub fn christoffel_jet(&self, x: &[f64]) -> (Vec<DMatrix<f64>>, Vec<Vec<DMatrix<f64>>>) {
        let m = self.dim;
        if self.is_euclidean() {
            return (vec![DMatrix::zeros(m, m); m], vec![vec![DMatrix::zeros(m, m); m]; m]);
        }
        let ginv = self.g0(x).try_inverse().expect("g0 is positive definite");
        let dg = self.dg0(x);
        let d2g = self.d2g0(x);
        let lower = |i: usize, j: usize, p: usize| 0.5 * (dg[i][(j, p)] + dg[j][(i, p)] - dg[p][(i, j)]);
        let gamma: Vec<DMatrix<f64>> = (0..m)
            .map(|k| DMatrix::from_fn(m, m, |i, j| (0..m).map(|p| ginv[(k, p)] * lower(i, j, p)).sum()))
            .collect();
        let dgamma = (0..m)
            .map(|l| {
                let dginv = -&ginv * &dg[l] * &ginv;
                let dlower =
                    |i: usize, j: usize, p: usize| 0.5 * (d2g[l][i][(j, p)] + d2g[l][j][(i, p)] - d2g[l][p][(i, j)]);
                (0..m)
                    .map(|k| {
                        DMatrix::from_fn(m, m, |i, j| {
                            (0..m).map(|p| dginv[(k, p)] * lower(i, j, p) + ginv[(k, p)] * dlower(i, j, p)).sum()
                        })
                    })
                    .collect()
            })
            .collect();
        (gamma, dgamma)
    }

    pub fn inner(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let g = self.g0(x);
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += g[(i, j)] * u[i] * v[j];
            }
        }
        s
    }

    pub fn norm(&self, x: &[f64], v: &[f64]) -> f64 {
        self.inner(x, v, v).sqrt()
    }

    /// g₀-unit outward normal ν = −∇ρ / |∇ρ|.
    pub fn outward_normal(&self, x: &[f64]) -> Vec<f64> {
        let ginv = self.g0(x).try_inverse().expect("g0 is positive definite");
        let dr = DVector::from_vec(self.rho_grad(x));
        let v = -(&ginv * &dr);
        let n = (dr.dot(&(&ginv * &dr))).sqrt();
        v.iter().map(|c| c / n).collect()
    }
}

/// Conformal factor models c(x₁, x′) > 0.
#[derive(Clone)]
pub enum ConformalFactor {
    Constant { value: f64 },
    /// c = e^{rate·x₁}
    ExpX1 { rate: f64 },
    /// c = 1 + κ|x′|²
    Radial { kappa: f64 },
    Custom { name: String, c: ScalarFn, fd_step: f64 },
}

impl fmt::Debug for ConformalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { value } => write!(f, "Constant({value})"),
            Self::ExpX1 { rate } => write!(f, "ExpX1({rate})"),
            Self::Radial { kappa } => write!(f, "Radial({kappa})"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl ConformalFactor {
    pub fn value(&self, x1: f64, xp: &[f64]) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::ExpX1 { rate } => (rate * x1).exp(),
            Self::Radial { kappa } => 1.0 + kappa * xp.iter().map(|v| v * v).sum::<f64>(),
            Self::Custom { c, .. } => c(x1, xp),
        }
    }

    /// True when c does not depend on x′.
    pub fn transversally_constant(&self) -> bool {
        matches!(self, Self::Constant { .. } | Self::ExpX1 { .. })
    }

    /// Partial derivative ∂^α c with α = (α₁, α′).
    pub fn partial(&self, x1: f64, xp: &[f64], alpha: &[usize]) -> f64 {
        let order: usize = alpha.iter().sum();
        if order == 0 {
            return self.value(x1, xp);
        }
        match self {
            Self::Constant { .. } => 0.0,
            Self::ExpX1 { rate } => {
                if alpha[1..].iter().any(|&a| a > 0) {
                    0.0
                } else {
                    rate.powi(alpha[0] as i32) * (rate * x1).exp()
                }
            }
            Self::Radial { kappa } => {
                if alpha[0] > 0 || order > 2 {
                    return 0.0;
                }
                let nz: Vec<usize> = (1..alpha.len()).filter(|&k| alpha[k] > 0).collect();
                match (order, nz.len()) {
                    (1, _) => 2.0 * kappa * xp[nz[0] - 1],
                    (2, 1) => 2.0 * kappa,
                    _ => 0.0,
                }
            }
            Self::Custom { c, fd_step, .. } => {
                let f = |p: &[f64]| c(p[0], &p[1..]);
                let mut p = vec![x1];
                p.extend_from_slice(xp);
                fd::mixed_partial(&f, &p, alpha, *fd_step)
            }
        }
    }
}

/// The product manifold J × M₀ with g = c(e ⊕ g₀).
#[derive(Debug, Clone)]
pub struct CtaManifold {
    pub name: String,
    pub x1_interval: [f64; 2],
    pub transversal: TransversalMetric,
    pub conformal: ConformalFactor,
}

/// Pointwise geometric data at p = (x₁, x′).
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub order: usize,
    pub g0: DMatrix<f64>,
    pub g0_inv: DMatrix<f64>,
    pub sqrt_det_g0: f64,
    pub dg0: Vec<DMatrix<f64>>,
    pub d2g0: Vec<Vec<DMatrix<f64>>>,
    pub c: f64,
    /// ∂_i c over all n coordinates.
    pub dc: Vec<f64>,
    pub d2c: DMatrix<f64>,
}

/// Value, gradient and Hessian of a (complex) scalar field in the product chart.
#[derive(Debug, Clone)]
pub struct ScalarJet {
    pub value: Complex64,
    pub grad: Vec<Complex64>,
    pub hess: DMatrix<Complex64>,
}

impl ScalarJet {
    /// Jet of a real callback by fourth-order central differences.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(f: &F, p: &[f64], step: f64) -> Self {
        let n = p.len();
        let grad = (0..n)
            .map(|i| {
                let mut a = vec![0; n];
                a[i] = 1;
                Complex64::new(fd::mixed_partial(f, p, &a, step), 0.0)
            })
            .collect();
        let hess = DMatrix::from_fn(n, n, |i, j| {
            let mut a = vec![0; n];
            a[i] += 1;
            a[j] += 1;
            Complex64::new(fd::mixed_partial(f, p, &a, step), 0.0)
        });
        ScalarJet { value: Complex64::new(f(p), 0.0), grad, hess }
    }
}

impl CtaManifold {
    pub fn new(name: &str, x1_interval: [f64; 2], transversal: TransversalMetric, conformal: ConformalFactor) -> Result<Self> {
        if transversal.dim < 2 {
            return Err(Error::ConfigInvalid(format!("n = {} is below 3", transversal.dim + 1)));
        }
        if !(x1_interval[0] < x1_interval[1]) || !x1_interval.iter().all(|v| v.is_finite()) {
            return Err(Error::ConfigInvalid(format!("x1 interval {x1_interval:?} is not a bounded interval")));
        }
        Ok(CtaManifold { name: name.to_string(), x1_interval, transversal, conformal })
    }

    pub fn n(&self) -> usize {
        self.transversal.dim + 1
    }

    pub fn fd_step(&self) -> f64 {
        self.transversal.fd_step
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        let [a, b] = self.x1_interval;
        if p.len() != self.n() || p[0] < a - BOUNDARY_BAND || p[0] > b + BOUNDARY_BAND || !self.transversal.in_extended(&p[1..]) {
            return Err(Error::PointOutsideDomain(p.to_vec()));
        }
        Ok(())
    }

    pub fn c(&self, x1: f64, xp: &[f64]) -> f64 {
        self.conformal.value(x1, xp)
    }

    pub fn metric_jet(&self, p: &[f64], order: usize) -> Result<MetricJet> {
        self.check(p)?;
        if order > 4 {
            return Err(Error::InvalidInput(format!("jet order {order} exceeds 4")));
        }
        let n = self.n();
        let xp = &p[1..];
        let g0 = self.transversal.g0(xp);
        let g0_inv = g0.clone().try_inverse().ok_or_else(|| Error::ChartDegenerate("singular g0".into()))?;
        let sqrt_det_g0 = g0.determinant().sqrt();
        let unit = |i: usize, j: Option<usize>| {
            let mut a = vec![0; n];
            a[i] += 1;
            if let Some(j) = j {
                a[j] += 1;
            }
            a
        };
        let (dg0, dc) = if order >= 1 {
            (self.transversal.dg0(xp), (0..n).map(|i| self.conformal.partial(p[0], xp, &unit(i, None))).collect())
        } else {
            (Vec::new(), Vec::new())
        };
        let (d2g0, d2c) = if order >= 2 {
            (
                self.transversal.d2g0(xp),
                DMatrix::from_fn(n, n, |i, j| self.conformal.partial(p[0], xp, &unit(i, Some(j)))),
            )
        } else {
            (Vec::new(), DMatrix::zeros(0, 0))
        };
        Ok(MetricJet { point: p.to_vec(), order, g0, g0_inv, sqrt_det_g0, dg0, d2g0, c: self.c(p[0], xp), dc, d2c })
    }

    /// Full metric g_{ij} at p.
    pub fn metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check(p)?;
        let n = self.n();
        let c = self.c(p[0], &p[1..]);
        let g0 = self.transversal.g0(&p[1..]);
        Ok(DMatrix::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => c,
            (0, _) | (_, 0) => 0.0,
            _ => c * g0[(i - 1, j - 1)],
        }))
    }

    pub fn volume_density(&self, p: &[f64]) -> Result<f64> {
        self.check(p)?;
        let c = self.c(p[0], &p[1..]);
        Ok(c.powf(self.n() as f64 / 2.0) * self.transversal.g0(&p[1..]).determinant().sqrt())
    }

    /// Δ_g u = c⁻¹(∂₁²u + Δ_{g₀}u) + (n/2 − 1)c⁻²(∂₁c ∂₁u + ⟨∇_{g₀}c, ∇_{g₀}u⟩).
    pub fn laplace_beltrami(&self, p: &[f64], u: &ScalarJet) -> Result<Complex64> {
        let jet = self.metric_jet(p, 1)?;
        let m = self.transversal.dim;
        let nf = self.n() as f64;
        let gamma = self.transversal.christoffel(&p[1..]);
        let mut lap0 = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let mut term = u.hess[(i + 1, j + 1)];
                for (k, gk) in gamma.iter().enumerate() {
                    term -= u.grad[k + 1] * gk[(i, j)];
                }
                lap0 += term * jet.g0_inv[(i, j)];
            }
        }
        let mut cross = u.grad[0] * jet.dc[0];
        for i in 0..m {
            for j in 0..m {
                cross += u.grad[j + 1] * (jet.g0_inv[(i, j)] * jet.dc[i + 1]);
            }
        }
        Ok((u.hess[(0, 0)] + lap0) / jet.c + cross * ((nf / 2.0 - 1.0) / (jet.c * jet.c)))
    }

    /// Δ_g x₁ = (n/2 − 1)c⁻²∂₁c.
    pub fn laplace_of_x1(&self, p: &[f64]) -> Result<f64> {
        let jet = self.metric_jet(p, 1)?;
        Ok((self.n() as f64 / 2.0 - 1.0) * jet.dc[0] / (jet.c * jet.c))
    }

    /// Δ_g of a callback, its jet taken by central differences.
    pub fn laplace_beltrami_fn<F: Fn(&[f64]) -> f64>(&self, f: &F, p: &[f64]) -> Result<f64> {
        let jet = ScalarJet::from_fn(f, p, self.fd_step());
        Ok(self.laplace_beltrami(p, &jet)?.re)
    }

    /// ∇_g u = c⁻¹(∂₁u, g₀⁻¹∂′u) from the differential du.
    pub fn gradient(&self, p: &[f64], du: &[f64]) -> Result<Vec<f64>> {
        self.sharp(p, du)
    }

    pub fn flat(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let g = self.metric(p)?;
        Ok((g * DVector::from_column_slice(v)).iter().copied().collect())
    }

    pub fn sharp(&self, p: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        self.check(p)?;
        let c = self.c(p[0], &p[1..]);
        let ginv = self.transversal.g0(&p[1..]).try_inverse().expect("g0 is positive definite");
        let tail = ginv * DVector::from_column_slice(&xi[1..]);
        let mut out = vec![xi[0] / c];
        out.extend(tail.iter().map(|v| v / c));
        Ok(out)
    }

    pub fn inner(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        let g = self.metric(p)?;
        Ok(DVector::from_column_slice(u).dot(&(g * DVector::from_column_slice(v))))
    }
}
