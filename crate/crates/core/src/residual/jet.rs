//! Truncated Taylor polynomials in three variables (x₁, t, y) up to total degree 4.

use std::sync::OnceLock;

use num_complex::Complex64;

pub const MAX_ORDER: usize = 4;
const LEN: usize = 35;

struct Tables {
    exps: [[usize; 3]; LEN],
    index: [[[usize; MAX_ORDER + 1]; MAX_ORDER + 1]; MAX_ORDER + 1],
    /// (p, q, r) with monomial_p·monomial_q = monomial_r, sorted by deg r.
    products: Vec<(usize, usize, usize, usize)>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut exps = [[0usize; 3]; LEN];
        let mut index = [[[usize::MAX; MAX_ORDER + 1]; MAX_ORDER + 1]; MAX_ORDER + 1];
        let mut k = 0;
        for deg in 0..=MAX_ORDER {
            for i in (0..=deg).rev() {
                for j in (0..=deg - i).rev() {
                    let l = deg - i - j;
                    exps[k] = [i, j, l];
                    index[i][j][l] = k;
                    k += 1;
                }
            }
        }
        let mut products = Vec::new();
        for p in 0..LEN {
            for q in 0..LEN {
                let e = [exps[p][0] + exps[q][0], exps[p][1] + exps[q][1], exps[p][2] + exps[q][2]];
                let deg = e[0] + e[1] + e[2];
                if deg <= MAX_ORDER {
                    products.push((deg, p, q, index[e[0]][e[1]][e[2]]));
                }
            }
        }
        products.sort_by_key(|x| x.0);
        Tables { exps, index, products }
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Σ c_α (x − x₀)^α over |α| ≤ order; coefficients above `order` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    coeffs: [Complex64; LEN],
    pub order: usize,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet { coeffs: [Complex64::new(0.0, 0.0); LEN], order }
    }

    pub fn constant(value: Complex64, order: usize) -> Self {
        let mut j = Self::zero(order);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function value + (x_axis − x₀).
    pub fn variable(axis: usize, value: f64, order: usize) -> Self {
        let mut j = Self::constant(Complex64::new(value, 0.0), order);
        if order >= 1 {
            let mut e = [0; 3];
            e[axis] = 1;
            j.coeffs[index(e)] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// Builds the jet from partial derivatives ∂^α f at the base point.
    pub fn from_partials(order: usize, mut partial: impl FnMut([usize; 3]) -> Complex64) -> Self {
        let t = tables();
        let mut j = Self::zero(order);
        for k in 0..LEN {
            let e = t.exps[k];
            if e[0] + e[1] + e[2] > order {
                break;
            }
            j.coeffs[k] = partial(e) / (factorial(e[0]) * factorial(e[1]) * factorial(e[2]));
        }
        j
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of (x − x₀)^e.
    pub fn coeff(&self, e: [usize; 3]) -> Complex64 {
        if e[0] + e[1] + e[2] > self.order {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[index(e)]
    }

    /// ∂^e at the base point.
    pub fn partial(&self, e: [usize; 3]) -> Complex64 {
        self.coeff(e) * (factorial(e[0]) * factorial(e[1]) * factorial(e[2]))
    }

    pub fn truncate(mut self, order: usize) -> Self {
        if order < self.order {
            self.order = order;
            self.truncate_in_place();
        }
        self
    }

    pub fn scale(mut self, s: Complex64) -> Self {
        for c in &mut self.coeffs {
            *c *= s;
        }
        self
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet::zero(order);
        for k in 0..LEN {
            out.coeffs[k] = self.coeffs[k] + other.coeffs[k];
        }
        out.truncate_in_place();
        out
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet::zero(order);
        for &(deg, p, q, r) in &tables().products {
            if deg > order {
                break;
            }
            out.coeffs[r] += self.coeffs[p] * other.coeffs[q];
        }
        out
    }

    fn truncate_in_place(&mut self) {
        let t = tables();
        for k in 0..LEN {
            let e = t.exps[k];
            if e[0] + e[1] + e[2] > self.order {
                self.coeffs[k] = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// ∂/∂x_axis; the result has order one less.
    pub fn deriv(&self, axis: usize) -> Jet {
        let t = tables();
        let order = self.order.saturating_sub(1);
        let mut out = Jet::zero(order);
        if self.order == 0 {
            return out;
        }
        for k in 0..LEN {
            let e = t.exps[k];
            let deg = e[0] + e[1] + e[2];
            if deg > self.order {
                break;
            }
            if e[axis] == 0 {
                continue;
            }
            let mut f = e;
            f[axis] -= 1;
            out.coeffs[t.index[f[0]][f[1]][f[2]]] += self.coeffs[k] * e[axis] as f64;
        }
        out
    }

    /// Σ_k coeffs[k]·N^k with N = self − value, which is nilpotent of degree order + 1.
    fn series(&self, coeffs: &[Complex64]) -> Jet {
        let mut nil = *self;
        nil.coeffs[0] = Complex64::new(0.0, 0.0);
        let mut out = Jet::constant(coeffs[0], self.order);
        let mut power = Jet::constant(Complex64::new(1.0, 0.0), self.order);
        for c in coeffs.iter().take(self.order + 1).skip(1) {
            power = power.mul(&nil);
            out = out.add(&power.scale(*c));
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e0 = self.value().exp();
        let coeffs: Vec<Complex64> = (0..=MAX_ORDER).map(|k| e0 / factorial(k)).collect();
        self.series(&coeffs)
    }

    pub fn ln(&self) -> Jet {
        let v = self.value();
        let mut coeffs = vec![v.ln()];
        for k in 1..=MAX_ORDER {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            coeffs.push(sign / (k as f64 * v.powu(k as u32)));
        }
        self.series(&coeffs)
    }

    pub fn recip(&self) -> Jet {
        let v = self.value();
        let coeffs: Vec<Complex64> =
            (0..=MAX_ORDER).map(|k| if k % 2 == 0 { 1.0 / v.powu(k as u32 + 1) } else { -1.0 / v.powu(k as u32 + 1) }).collect();
        self.series(&coeffs)
    }

    pub fn powf(&self, p: f64) -> Jet {
        self.ln().scale(Complex64::new(p, 0.0)).exp()
    }

    /// outer(value + inner_0 − v_0, …) where `outer` is a jet in the ambient variables and
    /// `inner` are jets whose constant terms are the ambient base point.
    pub fn compose(outer: &Jet, inner: &[Jet; 3]) -> Jet {
        let order = outer.order.min(inner.iter().map(|j| j.order).min().unwrap());
        let shifted: Vec<Jet> = inner
            .iter()
            .map(|j| {
                let mut d = j.truncate(order);
                d.coeffs[0] = Complex64::new(0.0, 0.0);
                d
            })
            .collect();
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(3);
        for d in &shifted {
            let mut p = vec![Jet::constant(Complex64::new(1.0, 0.0), order)];
            for k in 1..=order {
                let next = p[k - 1].mul(d);
                p.push(next);
            }
            powers.push(p);
        }
        let t = tables();
        let mut out = Jet::zero(order);
        for k in 0..LEN {
            let e = t.exps[k];
            if e[0] + e[1] + e[2] > order {
                break;
            }
            let c = outer.coeffs[k];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let term = powers[0][e[0]].mul(&powers[1][e[1]]).mul(&powers[2][e[2]]);
            out = out.add(&term.scale(c));
        }
        out
    }
}

fn index(e: [usize; 3]) -> usize {
    tables().index[e[0]][e[1]][e[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn dsin(t: f64, k: usize) -> f64 {
        match k % 4 {
            0 => t.sin(),
            1 => t.cos(),
            2 => -t.sin(),
            _ => -t.cos(),
        }
    }

    /// f(x, t, y) = e^{x}·sin(t)·(1 + y)² and its exact partials at (0.3, 0.7, 0.2).
    fn sample() -> (Jet, impl Fn([usize; 3]) -> f64) {
        let (x, t, y) = (0.3f64, 0.7f64, 0.2f64);
        let partial = move |e: [usize; 3]| {
            let fy = match e[2] {
                0 => (1.0 + y) * (1.0 + y),
                1 => 2.0 * (1.0 + y),
                2 => 2.0,
                _ => 0.0,
            };
            x.exp() * dsin(t, e[1]) * fy
        };
        let sin_t = Jet::from_partials(4, |e| if e[0] == 0 && e[2] == 0 { c(dsin(t, e[1])) } else { c(0.0) });
        let one_plus_y = Jet::variable(2, y, 4).add(&Jet::constant(c(1.0), 4));
        let j = Jet::variable(0, x, 4).exp().mul(&sin_t).mul(&one_plus_y.powf(2.0));
        (j, partial)
    }

    #[test]
    fn products_and_elementary_functions() {
        let (j, partial) = sample();
        for k in 0..LEN {
            let e = tables().exps[k];
            let want = partial(e);
            assert!((j.partial(e) - want).norm() < 1e-12 * (1.0 + want.abs()), "{e:?}");
        }
    }

    #[test]
    fn derivative_matches_shifted_partials() {
        let (j, partial) = sample();
        let d = j.deriv(1).deriv(2);
        assert_eq!(d.order, 2);
        for e in [[0, 0, 0], [1, 0, 0], [0, 1, 1], [2, 0, 0]] {
            let want = partial([e[0], e[1] + 1, e[2] + 1]);
            assert!((d.partial(e) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn recip_and_ln_invert() {
        let (j, _) = sample();
        let one = j.mul(&j.recip());
        assert!((one.value() - 1.0).norm() < 1e-14);
        for k in 1..LEN {
            assert!(one.coeffs[k].norm() < 1e-12);
        }
        let back = j.ln().exp();
        for k in 0..LEN {
            assert!((back.coeffs[k] - j.coeffs[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn composition_with_linear_map() {
        // outer(u, v, w) = u·v + w², inner = (x + t, x − y, 2t)
        let (u0, v0, w0) = (0.5, 0.1, 0.4);
        let outer = Jet::variable(0, u0, 4).mul(&Jet::variable(1, v0, 4)).add(&Jet::variable(2, w0, 4).mul(&Jet::variable(2, w0, 4)));
        let x = Jet::variable(0, 0.3, 4);
        let t = Jet::variable(1, 0.2, 4);
        let y = Jet::variable(2, 0.2, 4);
        let inner = [x.add(&t), x.sub(&y), t.scale(c(2.0))];
        let got = Jet::compose(&outer, &inner);
        let want = inner[0].mul(&inner[1]).add(&inner[2].mul(&inner[2]));
        for k in 0..LEN {
            assert!((got.coeffs[k] - want.coeffs[k]).norm() < 1e-14);
        }
    }
}
