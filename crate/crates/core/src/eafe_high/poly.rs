//! Small multivariate polynomials (dimension ≤ 3) for Nédélec tables.

use std::ops::{Add, Mul, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    dim: usize,
    /// `(exponents, coefficient)`, sorted by exponents, no duplicates.
    terms: Vec<([u8; 3], f64)>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(dim, [0; 3], c)
    }

    pub fn monomial(dim: usize, exponents: [u8; 3], c: f64) -> Self {
        Self {
            dim,
            terms: vec![(exponents, c)],
        }
        .normalized()
    }

    /// The coordinate function `z_k`.
    pub fn coordinate(dim: usize, k: usize) -> Self {
        let mut e = [0; 3];
        e[k] = 1;
        Self::monomial(dim, e, 1.0)
    }

    /// Affine function `c + g·z`.
    pub fn affine(c: f64, g: &[f64]) -> Self {
        let dim = g.len();
        let mut p = Self::constant(dim, c);
        for (k, &gk) in g.iter().enumerate() {
            p = p + Self::coordinate(dim, k) * gk;
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<([u8; 3], f64)> = Vec::with_capacity(self.terms.len());
        for (e, c) in self.terms {
            match out.last_mut() {
                Some((le, lc)) if *le == e => *lc += c,
                _ => out.push((e, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        self.terms = out;
        self
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * (0..self.dim).map(|k| z[k].powi(e[k] as i32)).product::<f64>())
            .sum()
    }

    pub fn derivative(&self, k: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[k] > 0)
            .map(|&(mut e, c)| {
                let p = e[k];
                e[k] -= 1;
                (e, c * p as f64)
            })
            .collect();
        Self { dim: self.dim, terms }.normalized()
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dim).map(|k| self.derivative(k)).collect()
    }

    /// `Σ c_i p_i`, normalized once.
    pub fn combination<'a>(dim: usize, parts: impl IntoIterator<Item = (&'a Poly, f64)>) -> Self {
        let mut terms = Vec::new();
        for (p, c) in parts {
            if c != 0.0 {
                terms.extend(p.terms.iter().map(|&(e, v)| (e, v * c)));
            }
        }
        Self { dim, terms }.normalized()
    }

    /// Exact integral over the reference simplex `{z ≥ 0, Σz ≤ 1}`, from
    /// `∫ z^a = a! / (n + |a|)!` (multi-index factorials).
    pub fn reference_integral(&self) -> f64 {
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        self.terms
            .iter()
            .map(|(e, c)| {
                let total: usize = e.iter().map(|&x| x as usize).sum();
                c * e[..self.dim].iter().map(|&x| fact(x as usize)).product::<f64>() / fact(self.dim + total)
            })
            .sum()
    }

    /// Coefficients in `s` of `p(a + s (b − a))`, lowest degree first.
    pub fn restrict_to_segment(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        const MAX: usize = 32;
        let deg = self.degree();
        assert!(deg < MAX, "polynomial degree {deg} too large");
        let mut out = vec![0.0; deg + 1];
        for (e, c) in &self.terms {
            let mut uni = [0.0; MAX];
            uni[0] = *c;
            let mut len = 1;
            for k in 0..self.dim {
                let (c0, c1) = (a[k], b[k] - a[k]);
                for _ in 0..e[k] {
                    // Multiply in place by c0 + c1 s.
                    uni[len] = 0.0;
                    for i in (0..=len).rev() {
                        uni[i] = uni[i] * c0 + if i > 0 { uni[i - 1] * c1 } else { 0.0 };
                    }
                    len += 1;
                }
            }
            for (o, v) in out.iter_mut().zip(&uni[..len]) {
                *o += v;
            }
        }
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        // Both term lists are sorted; merge them.
        let mut terms = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut a, mut b) = (self.terms.into_iter().peekable(), rhs.terms.into_iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    let (e, c) = a.next().unwrap();
                    (e, c + b.next().unwrap().1)
                }
                (Some(x), Some(y)) if x.0 < y.0 => a.next().unwrap(),
                (Some(_), Some(_)) | (None, Some(_)) => b.next().unwrap(),
                (Some(_), None) => a.next().unwrap(),
                (None, None) => break,
            };
            if next.1 != 0.0 {
                terms.push(next);
            }
        }
        Poly { dim: self.dim.max(rhs.dim), terms }
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + rhs * -1.0
    }
}

impl Mul<f64> for Poly {
    type Output = Poly;
    fn mul(mut self, rhs: f64) -> Poly {
        if rhs == 0.0 {
            self.terms.clear();
        }
        for t in &mut self.terms {
            t.1 *= rhs;
        }
        self
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                terms.push((e, ca * cb));
            }
        }
        Poly { dim: self.dim, terms }.normalized()
    }
}

/// A vector field with polynomial components.
pub type VecPoly = Vec<Poly>;

pub fn vec_eval(v: &VecPoly, z: &[f64]) -> Vec<f64> {
    v.iter().map(|p| p.eval(z)).collect()
}

/// `Σ c_i v_i`.
pub fn vec_combination(fields: &[VecPoly], coeffs: &[f64]) -> VecPoly {
    (0..fields[0].len())
        .map(|k| Poly::combination(fields[0][0].dim(), fields.iter().zip(coeffs).map(|(f, &c)| (&f[k], c))))
        .collect()
}

/// `M v` for a constant matrix `M`.
pub fn vec_transform(m: &nalgebra::DMatrix<f64>, v: &VecPoly) -> VecPoly {
    (0..m.nrows())
        .map(|i| Poly::combination(v[0].dim(), v.iter().enumerate().map(|(j, vj)| (vj, m[(i, j)]))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_integral_matches_quadrature() {
        for dim in 1..=3 {
            let mut p = Poly::constant(dim, 0.7);
            for k in 0..dim {
                p = &p * &Poly::affine(0.3 * k as f64 - 0.2, &vec![1.0 + k as f64; dim]);
            }
            let rule = crate::fem::QuadratureRule::simplex(dim, dim);
            let vol = 1.0 / (1..=dim).product::<usize>() as f64;
            let q: f64 = rule.points.iter().zip(&rule.weights).map(|(l, w)| w * p.eval(&l[1..])).sum::<f64>() * vol;
            assert!((p.reference_integral() - q).abs() < 1e-14, "dim {dim}");
        }
    }

    #[test]
    fn arithmetic_and_evaluation() {
        let x = Poly::coordinate(2, 0);
        let y = Poly::coordinate(2, 1);
        let p = &(x.clone() + y.clone() * 2.0) * &(x.clone() - Poly::constant(2, 1.0));
        // (x + 2y)(x − 1) at (3, 0.5) = 4 · 2
        assert_eq!(p.eval(&[3.0, 0.5]), 8.0);
        assert_eq!(p.degree(), 2);
        // ∂x = 2x + 2y − 1
        assert_eq!(p.derivative(0).eval(&[3.0, 0.5]), 6.0);
    }

    #[test]
    fn segment_restriction_matches_evaluation() {
        let x = Poly::coordinate(2, 0);
        let y = Poly::coordinate(2, 1);
        let p = &(&x * &y) * &x + y.clone() * 3.0 - Poly::constant(2, 0.5);
        let (a, b) = ([0.2, -1.0], [1.5, 0.7]);
        let c = p.restrict_to_segment(&a, &b);
        for s in [0.0, 0.3, 1.0] {
            let z = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let v: f64 = c.iter().enumerate().map(|(i, ci)| ci * s.powi(i as i32)).sum();
            assert!((v - p.eval(&z)).abs() < 1e-14);
        }
    }
}
