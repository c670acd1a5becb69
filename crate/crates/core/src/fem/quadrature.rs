//! Conical-product (collapsed Gauss–Legendre) rules on simplices.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::mesh::factorial;

/// Quadrature on the reference simplex in barycentric form.
///
/// Weights are positive and sum to 1, so `Σ w f(x(λ)) · |T|` approximates
/// `∫_T f`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

// P_m(x) and P_m'(x) by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, m as f64 * (x * p1 - p0) / (x * x - 1.0))
}

impl QuadratureRule {
    /// Rule on the `dim`-simplex exact for polynomials of total degree
    /// `degree`. `dim = 0` gives the single-point rule. Rules are built once
    /// and shared.
    pub fn simplex(dim: usize, degree: usize) -> &'static Self {
        static RULES: OnceLock<Mutex<HashMap<(usize, usize), &'static QuadratureRule>>> = OnceLock::new();
        let mut rules = RULES.get_or_init(Default::default).lock().expect("quadrature cache poisoned");
        rules.entry((dim, degree)).or_insert_with(|| Box::leak(Box::new(Self::build(dim, degree))))
    }

    fn build(dim: usize, degree: usize) -> Self {
        if dim == 0 {
            return Self {
                points: vec![vec![1.0]],
                weights: vec![1.0],
                exact_degree: usize::MAX,
            };
        }
        // The collapse Jacobian adds up to dim−1 to the degree along axis 0.
        let m = (degree + dim) / 2 + 1;
        let (nodes, weights) = gauss_legendre(m);
        let mut points = Vec::new();
        let mut ws = Vec::new();
        let mut idx = vec![0usize; dim];
        let total = m.pow(dim as u32);
        for _ in 0..total {
            // x_1 = u_1, x_k = (1−u_1)…(1−u_{k−1}) u_k; Jacobian Π (1−u_k)^{dim−1−k}.
            let mut x = vec![0.0; dim];
            let mut remaining = 1.0;
            let mut w = 1.0;
            for k in 0..dim {
                let u = nodes[idx[k]];
                x[k] = remaining * u;
                w *= weights[idx[k]] * remaining;
                remaining *= 1.0 - u;
            }
            let mut lam = Vec::with_capacity(dim + 1);
            lam.push(1.0 - x.iter().sum::<f64>());
            lam.extend_from_slice(&x);
            points.push(lam);
            ws.push(w * factorial(dim) as f64);
            for k in 0..dim {
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self {
            points,
            weights: ws,
            exact_degree: degree,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `∫_T Π λ_i^{a_i} / |T| = n! Π a_i! / (n + Σa)!`.
pub fn barycentric_monomial_mean(exponents: &[usize]) -> f64 {
    let n = exponents.len() - 1;
    let total: usize = exponents.iter().sum();
    let num: f64 = exponents.iter().map(|&a| factorial(a) as f64).product::<f64>() * factorial(n) as f64;
    let mut den = 1.0;
    for k in 1..=(n + total) {
        den *= k as f64;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_exponents(parts: usize, total: usize) -> Vec<Vec<usize>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        let mut out = Vec::new();
        for a in 0..=total {
            for mut rest in all_exponents(parts - 1, total - a) {
                rest.insert(0, a);
                out.push(rest);
            }
        }
        out
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for m in 1..12 {
            let (x, w) = gauss_legendre(m);
            for p in 0..2 * m {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-14, "m={m} p={p}");
            }
        }
    }

    #[test]
    fn simplex_rules_match_closed_form_monomials() {
        for dim in 1..=3 {
            for degree in 0..=10 {
                let rule = QuadratureRule::simplex(dim, degree);
                assert!(rule.weights.iter().all(|&w| w > 0.0));
                assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                for total in 0..=degree {
                    for a in all_exponents(dim + 1, total) {
                        let q: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(l, w)| w * l.iter().zip(&a).map(|(li, &ai)| li.powi(ai as i32)).product::<f64>())
                            .sum();
                        let exact = barycentric_monomial_mean(&a);
                        assert!((q - exact).abs() <= 1e-13 * exact.max(1e-3), "dim={dim} a={a:?}");
                    }
                }
            }
        }
    }
}
