//! Integrals of `e^{ℓ} p` with `ℓ` affine and `p` polynomial, over segments
//! (closed form) and triangles (divergence-theorem reduction to edges).
//!
//! Callers shift `ℓ` so that it is ≤ 0 on the domain; nothing here then
//! overflows for any slope.

use super::poly::Poly;
use crate::fem::{ElementGeometry, QuadratureRule};

/// `F_m(μ) = ∫₀¹ sᵐ e^{−μs} ds` for `m = 0..=max_m`, `μ ≥ 0`.
pub fn decaying_moments(mu: f64, max_m: usize) -> Vec<f64> {
    debug_assert!(mu >= 0.0);
    if mu <= 2.0 {
        // Alternating series with terms bounded by 2^j/j!; no cancellation trouble.
        (0..=max_m)
            .map(|m| {
                let mut sum = 0.0;
                let mut pow = 1.0;
                for j in 0..60 {
                    let term = pow / (m + j + 1) as f64;
                    sum += term;
                    if term.abs() < 1e-18 * sum.abs() {
                        break;
                    }
                    pow *= -mu / (j + 1) as f64;
                }
                sum
            })
            .collect()
    } else {
        let e = (-mu).exp();
        let mut out = Vec::with_capacity(max_m + 1);
        out.push(-(-mu).exp_m1() / mu);
        for m in 1..=max_m {
            out.push((m as f64 * out[m - 1] - e) / mu);
        }
        out
    }
}

/// Coefficients of `p(1 − u)` from those of `p(s)`.
fn reflect(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    // (1 − u)^m expanded by the binomial theorem.
    for (m, &c) in p.iter().enumerate() {
        let mut binom = 1.0;
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            out[k] += c * binom * sign;
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
    }
    out
}

/// `∫₀¹ exp(ℓ_a + (ℓ_b − ℓ_a) s) p(s) ds` with `p` given by monomial
/// coefficients in `s`, lowest degree first.
pub fn exp_poly_segment(la: f64, lb: f64, p: &[f64]) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let kappa = lb - la;
    // Factor out the endpoint where ℓ is largest so the remaining weight decays.
    let (peak, coeffs) = if kappa <= 0.0 { (la, p.to_vec()) } else { (lb, reflect(p)) };
    let moments = decaying_moments(kappa.abs(), coeffs.len() - 1);
    peak.exp() * coeffs.iter().zip(&moments).map(|(c, f)| c * f).sum::<f64>()
}

/// `∫_T exp(l0 + g·z) p(z) dz` over the simplex with vertices `verts`.
///
/// Segments use the closed form. Triangles with `|g| diam(T) ≥ 2` use
/// `∫_T e^ℓ p = Σ_F (c·n_F) ∫_F e^ℓ p − ∫_T e^ℓ (c·∇p)` with `c = g/|g|²`,
/// which terminates after `deg p + 1` steps; flatter weights and
/// tetrahedra use a high-degree conical Gauss rule.
pub fn exp_poly_simplex(verts: &[Vec<f64>], l0: f64, g: &[f64], p: &Poly) -> f64 {
    if p.is_zero() {
        return 0.0;
    }
    let n = g.len();
    let ell = |z: &[f64]| l0 + g.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
    if n == 1 {
        let len = (verts[1][0] - verts[0][0]).abs();
        return len * exp_poly_segment(ell(&verts[0]), ell(&verts[1]), &p.restrict_to_segment(&verts[0], &verts[1]));
    }
    let refs: Vec<&[f64]> = verts.iter().map(|v| v.as_slice()).collect();
    let geom = ElementGeometry::from_vertices(&refs).expect("nondegenerate simplex");
    let gnorm2: f64 = g.iter().map(|v| v * v).sum();
    if n == 2 && gnorm2.sqrt() * geom.diameter >= 2.0 {
        let c: Vec<f64> = g.iter().map(|v| v / gnorm2).collect();
        let mut total = 0.0;
        for face in 0..3 {
            let grad = &geom.lambda_grads[face];
            let gn = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            let c_dot_n = -(c[0] * grad[0] + c[1] * grad[1]) / gn;
            let (a, b) = match face {
                0 => (&verts[1], &verts[2]),
                1 => (&verts[0], &verts[2]),
                _ => (&verts[0], &verts[1]),
            };
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            total += c_dot_n * len * exp_poly_segment(ell(a), ell(b), &p.restrict_to_segment(a, b));
        }
        let dp = p.derivative(0) * c[0] + p.derivative(1) * c[1];
        return total - exp_poly_simplex(verts, l0, g, &dp);
    }
    let rule = QuadratureRule::simplex(n, p.degree() + 24);
    let mut sum = 0.0;
    for (lam, w) in rule.points.iter().zip(&rule.weights) {
        let z = geom.map_point(lam);
        sum += w * ell(&z).exp() * p.eval(&z);
    }
    sum * geom.volume
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Gauss–Legendre oracle on [0, 1].
    fn oracle_segment(la: f64, lb: f64, p: &[f64]) -> f64 {
        let (x, w) = crate::fem::gauss_legendre(20);
        let pieces = 400;
        let mut sum = 0.0;
        for k in 0..pieces {
            let a = k as f64 / pieces as f64;
            let h = 1.0 / pieces as f64;
            for (xi, wi) in x.iter().zip(&w) {
                let s = a + h * xi;
                let ps: f64 = p.iter().enumerate().map(|(i, c)| c * s.powi(i as i32)).sum();
                sum += h * wi * (la + (lb - la) * s).exp() * ps;
            }
        }
        sum
    }

    #[test]
    fn segment_matches_composite_oracle() {
        let p = [0.3, -1.0, 2.0, 0.7];
        for &(la, lb) in &[(0.0, 0.0), (0.0, -1e-9), (-0.5, 0.0), (0.0, -3.0), (-60.0, 0.0), (0.0, -500.0), (-1.9, -0.1)] {
            for (a, b) in [(la, lb), (lb, la)] {
                let v = exp_poly_segment(a, b, &p);
                let o = oracle_segment(a, b, &p);
                assert!((v - o).abs() <= 1e-12 * o.abs().max(1e-3), "({a}, {b}): {v} vs {o}");
            }
        }
    }

    #[test]
    fn heat_edge_closed_form() {
        // ∫_E e^{−t/ε} over an edge from t_i to t_j, with the exponent shifted
        // by t_i: |E| ε (1 − e^{−(t_j − t_i)/ε}) / (t_j − t_i).
        let (ti, tj, eps) = (0.0, 0.25, 0.01);
        let v = exp_poly_segment(-ti / eps, -tj / eps, &[1.0]);
        let expect = eps * (1.0 - (-(tj - ti) / eps).exp()) / (tj - ti);
        assert!((v - expect).abs() < 1e-15 * expect.max(1.0));
    }

    #[test]
    fn triangle_reduction_matches_quadrature() {
        let verts = vec![vec![-0.3, -0.2], vec![0.6, -0.1], vec![0.1, 0.5]];
        let x = Poly::coordinate(2, 0);
        let y = Poly::coordinate(2, 1);
        let p = &x * &y + x.clone() * 2.0 - Poly::constant(2, 0.25) + &y * &y;
        for g in [[1.5, -1.0], [3.0, 0.0], [-6.0, 4.0], [20.0, 25.0]] {
            // Shift so that ℓ ≤ 0 on the triangle.
            let l0 = -verts.iter().map(|v| g[0] * v[0] + g[1] * v[1]).fold(f64::MIN, f64::max);
            let reduced = exp_poly_simplex(&verts, l0, &g, &p);
            // Oracle: 4-level red-refined composite rule of high degree.
            let mut tris = vec![verts.clone()];
            for _ in 0..4 {
                let mut next = Vec::new();
                for t in &tris {
                    let m = |a: usize, b: usize| vec![0.5 * (t[a][0] + t[b][0]), 0.5 * (t[a][1] + t[b][1])];
                    let (m01, m12, m02) = (m(0, 1), m(1, 2), m(0, 2));
                    next.push(vec![t[0].clone(), m01.clone(), m02.clone()]);
                    next.push(vec![m01.clone(), t[1].clone(), m12.clone()]);
                    next.push(vec![m02.clone(), m12.clone(), t[2].clone()]);
                    next.push(vec![m01, m12, m02]);
                }
                tris = next;
            }
            let rule = QuadratureRule::simplex(2, 30);
            let mut oracle = 0.0;
            for t in &tris {
                let refs: Vec<&[f64]> = t.iter().map(|v| v.as_slice()).collect();
                let geom = ElementGeometry::from_vertices(&refs).unwrap();
                for (lam, w) in rule.points.iter().zip(&rule.weights) {
                    let z = geom.map_point(lam);
                    oracle += geom.volume * w * (l0 + g[0] * z[0] + g[1] * z[1]).exp() * p.eval(&z);
                }
            }
            assert!((reduced - oracle).abs() <= 1e-12 * oracle.abs(), "g={g:?}: {reduced} vs {oracle}");
        }
    }
}
