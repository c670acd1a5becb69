//! First-kind Nédélec spaces of order 1 (triangles, tetrahedra) and order 2
//! (triangles), with moment degrees of freedom and the dual basis.
//!
//! Polynomials live in reference coordinates `ξ = (λ_1, …, λ_n)` of the
//! element, so barycentric coordinates are exact and shape does not affect
//! conditioning. Vector fields carry physical components; DOF values are in
//! physical units.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;

use super::expint::exp_poly_simplex;
use super::poly::{vec_combination, Poly, VecPoly};
use crate::error::{Error, Result};
use crate::fem::{local_edges, ElementGeometry, QuadratureRule};
use crate::linalg::DenseLu;

#[derive(Clone, Debug, PartialEq)]
pub enum DofKind {
    /// `∫_e (v·τ) w ds`, `τ` the unit tangent from `a` to `b`, `w = λ_weight`
    /// (or 1 when `weight` is `None`).
    Edge { a: usize, b: usize, weight: Option<usize> },
    /// `(1/|T|) ∫_T v·(x_m − x_0)` for `m = component + 1`.
    Interior { component: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DofFunctional {
    pub kind: DofKind,
    /// Local vertices of the sub-simplex carrying the functional.
    pub support: Vec<usize>,
}

/// Affine exponent `ℓ(ξ) = offset + slope·ξ` in reference coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpWeight {
    pub offset: f64,
    pub slope: Vec<f64>,
}

impl ExpWeight {
    pub fn zero(dim: usize) -> Self {
        Self {
            offset: 0.0,
            slope: vec![0.0; dim],
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.offset + self.slope.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }

    fn shifted(&self, by: f64) -> Self {
        Self {
            offset: self.offset - by,
            slope: self.slope.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NedelecSpace {
    pub order: usize,
    pub dim: usize,
    pub dofs: Vec<DofFunctional>,
    /// Dual basis: `η_i(φ_j) = δ_ij`.
    pub basis: Vec<VecPoly>,
    /// Basis `ψ_k` of `(P_{r−1})ⁿ`.
    pub psi: Vec<VecPoly>,
    pub center: Vec<f64>,
    /// Physical vertex coordinates.
    pub vertices: Vec<Vec<f64>>,
    /// Reference vertices: the origin and the unit vectors.
    pub z_vertices: Vec<Vec<f64>>,
    /// Barycentric coordinates as polynomials in `ξ`.
    pub lambda: Vec<Poly>,
    /// Physical `∇λ_i`.
    pub lambda_grads: Vec<Vec<f64>>,
    edge_lengths: Vec<f64>,
    /// `x_m − x_0`, `m = 1..=n`.
    edge_vectors: Vec<Vec<f64>>,
}

impl NedelecSpace {
    pub fn build(geom: &ElementGeometry, order: usize) -> Result<Self> {
        let (mut space, raw) = Self::without_basis(geom, order)?;
        let inv = reference_dof_inverse(order, space.dim)?;
        space.basis = (0..space.m())
            .map(|j| vec_combination(&raw, inv.column(j).as_slice()))
            .collect();
        Ok(space)
    }

    /// Largest `|η_i(φ_j) − δ_ij|`.
    pub fn duality_error(&self) -> f64 {
        let m = self.m();
        let weight = ExpWeight::zero(self.dim);
        (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| (self.apply(i, &self.basis[j], &weight) - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// The space with an empty dual basis, plus the raw spanning fields.
    fn without_basis(geom: &ElementGeometry, order: usize) -> Result<(Self, Vec<VecPoly>)> {
        let n = geom.dim();
        if !(order == 1 && (2..=3).contains(&n)) && !(order == 2 && n == 2) {
            return Err(Error::Unsupported(format!(
                "Nédélec order {order} in dimension {n} (supported: order 1 in 2D/3D, order 2 in 2D)"
            )));
        }
        let center = geom.barycenter();
        let z_vertices: Vec<Vec<f64>> = (0..=n)
            .map(|i| (1..=n).map(|m| if m == i { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut lambda = vec![Poly::affine(1.0, &vec![-1.0; n])];
        lambda.extend((0..n).map(|m| Poly::coordinate(n, m)));

        let mut dofs = Vec::new();
        for (a, b) in local_edges(n) {
            if order == 1 {
                dofs.push(DofFunctional {
                    kind: DofKind::Edge { a, b, weight: None },
                    support: vec![a, b],
                });
            } else {
                for w in [a, b] {
                    dofs.push(DofFunctional {
                        kind: DofKind::Edge { a, b, weight: Some(w) },
                        support: vec![a, b],
                    });
                }
            }
        }
        if order == 2 {
            for k in 0..n {
                dofs.push(DofFunctional {
                    kind: DofKind::Interior { component: k },
                    support: (0..=n).collect(),
                });
            }
        }

        // Whitney form λ_a∇λ_b − λ_b∇λ_a (physical gradients).
        let whitney = |a: usize, b: usize| -> VecPoly {
            (0..n)
                .map(|k| lambda[a].clone() * geom.lambda_grads[b][k] - lambda[b].clone() * geom.lambda_grads[a][k])
                .collect()
        };
        // Raw spanning set built from barycentric quantities only, so the
        // DOF matrix is the same on every element.
        let mut raw: Vec<VecPoly> = Vec::new();
        // Flux basis ∇λ_m and, for order 2, λ_i∇λ_m. Its DOF values do not
        // depend on the element.
        let covariant = |m: usize, p: &Poly| -> VecPoly { (0..n).map(|k| p.clone() * geom.lambda_grads[m][k]).collect() };
        let mut psi: Vec<VecPoly> = (1..=n).map(|m| covariant(m, &Poly::constant(n, 1.0))).collect();
        if order == 1 {
            raw.extend(local_edges(n).into_iter().map(|(a, b)| whitney(a, b)));
        } else {
            let scaled = |l: &Poly, w: &VecPoly| -> VecPoly { w.iter().map(|c| l * c).collect() };
            for (a, b) in local_edges(n) {
                let w = whitney(a, b);
                raw.push(scaled(&lambda[a], &w));
                raw.push(scaled(&lambda[b], &w));
            }
            // Two of λ_0φ_12, λ_1φ_02, λ_2φ_01; the third is dependent.
            raw.push(scaled(&lambda[2], &whitney(0, 1)));
            raw.push(scaled(&lambda[0], &whitney(1, 2)));
            for m in 1..=n {
                for i in 1..=n {
                    psi.push(covariant(m, &lambda[i]));
                }
            }
        }

        let space = Self {
            order,
            dim: n,
            dofs,
            basis: Vec::new(),
            psi,
            center,
            vertices: geom.vertex_coords.clone(),
            z_vertices,
            lambda,
            lambda_grads: geom.lambda_grads.clone(),
            edge_lengths: geom.edges.iter().map(|e| e.length).collect(),
            edge_vectors: (1..=n)
                .map(|m| (0..n).map(|k| geom.vertex_coords[m][k] - geom.vertex_coords[0][k]).collect())
                .collect(),
        };
        Ok((space, raw))
    }

    /// Dimension `M` of the space.
    pub fn m(&self) -> usize {
        self.dofs.len()
    }

    /// Dimension `M0` of `(P_{r−1})ⁿ`.
    pub fn m0(&self) -> usize {
        self.psi.len()
    }

    /// Reference coordinates of a physical point.
    pub fn to_frame(&self, x: &[f64]) -> Vec<f64> {
        let x0 = &self.vertices[0];
        (1..=self.dim)
            .map(|m| (0..self.dim).map(|k| self.lambda_grads[m][k] * (x[k] - x0[k])).sum())
            .collect()
    }

    /// Physical gradient of a polynomial in `ξ`: `Σ_m ∂_m p ∇λ_m`.
    pub fn physical_gradient(&self, p: &Poly) -> VecPoly {
        let n = self.dim;
        let partials = p.gradient();
        (0..n)
            .map(|k| Poly::combination(n, partials.iter().enumerate().map(|(m, dp)| (dp, self.lambda_grads[m + 1][k]))))
            .collect()
    }

    /// `max ℓ` over the support of DOF `j`.
    pub fn support_peak(&self, j: usize, weight: &ExpWeight) -> f64 {
        self.dofs[j]
            .support
            .iter()
            .map(|&v| weight.eval(&self.z_vertices[v]))
            .fold(f64::MIN, f64::max)
    }

    /// `η_j(e^{ℓ − shift} v)`.
    pub fn apply_shifted(&self, j: usize, field: &VecPoly, weight: &ExpWeight, shift: f64) -> f64 {
        let w = weight.shifted(shift);
        let n = self.dim;
        match self.dofs[j].kind {
            DofKind::Edge { a, b, weight: lw } => {
                let (za, zb) = (&self.z_vertices[a], &self.z_vertices[b]);
                let edge = super::edge_index(n, a, b);
                let len = self.edge_lengths[edge];
                let tangential = Poly::combination(
                    n,
                    (0..n).map(|k| (&field[k], (self.vertices[b][k] - self.vertices[a][k]) / len)),
                );
                let integrand = match lw {
                    Some(i) => &tangential * &self.lambda[i],
                    None => tangential,
                };
                let coeffs = integrand.restrict_to_segment(za, zb);
                len * super::expint::exp_poly_segment(w.eval(za), w.eval(zb), &coeffs)
            }
            DofKind::Interior { component } => {
                // dx = n!|T| dξ.
                let factor = crate::mesh::factorial(n) as f64;
                let tau = &self.edge_vectors[component];
                let along = Poly::combination(n, (0..n).map(|k| (&field[k], tau[k])));
                if w.slope.iter().all(|&g| g == 0.0) {
                    factor * w.offset.exp() * along.reference_integral()
                } else {
                    factor * exp_poly_simplex(&self.z_vertices, w.offset, &w.slope, &along)
                }
            }
        }
    }

    /// `η_j(e^{ℓ} v)`.
    pub fn apply(&self, j: usize, field: &VecPoly, weight: &ExpWeight) -> f64 {
        self.apply_shifted(j, field, weight, 0.0)
    }

    /// Mean of `e^{ℓ − shift}` over the support of DOF `j`.
    pub fn weight_mean(&self, j: usize, weight: &ExpWeight, shift: f64) -> f64 {
        let w = weight.shifted(shift);
        let one = Poly::constant(self.dim, 1.0);
        match self.dofs[j].kind {
            DofKind::Edge { a, b, .. } => {
                let (za, zb) = (&self.z_vertices[a], &self.z_vertices[b]);
                super::expint::exp_poly_segment(w.eval(za), w.eval(zb), &[1.0])
            }
            DofKind::Interior { .. } => {
                let ref_volume = 1.0 / crate::mesh::factorial(self.dim) as f64;
                exp_poly_simplex(&self.z_vertices, w.offset, &w.slope, &one) / ref_volume
            }
        }
    }

    /// Largest deviation of `Σ_j η_j(ψ_k) φ_j` from `ψ_k`, sampled on a
    /// quadrature grid, relative to `max |ψ_k|`.
    pub fn reconstruction_residual(&self, p: &DMatrix<f64>) -> f64 {
        let rule = QuadratureRule::simplex(self.dim, 6);
        let mut worst: f64 = 0.0;
        for k in 0..self.m0() {
            let coeffs: Vec<f64> = (0..self.m()).map(|j| p[(j, k)]).collect();
            let rebuilt = vec_combination(&self.basis, &coeffs);
            let (mut err, mut size): (f64, f64) = (0.0, 0.0);
            for lam in &rule.points {
                let z: Vec<f64> = (0..self.dim)
                    .map(|c| lam.iter().zip(&self.z_vertices).map(|(l, v)| l * v[c]).sum())
                    .collect();
                for c in 0..self.dim {
                    let target = self.psi[k][c].eval(&z);
                    err = err.max((rebuilt[c].eval(&z) - target).abs());
                    size = size.max(target.abs());
                }
            }
            worst = worst.max(err / size.max(f64::MIN_POSITIVE));
        }
        worst
    }
}
type InverseCache = Mutex<HashMap<(usize, usize), &'static DMatrix<f64>>>;

/// Inverse of the DOF matrix of the raw fields. The raw fields are built
/// from barycentric quantities, so the matrix is the same on every element
/// and is computed once on the reference simplex.
fn reference_dof_inverse(order: usize, n: usize) -> Result<&'static DMatrix<f64>> {
    static CACHE: OnceLock<InverseCache> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().expect("Nédélec cache poisoned");
    if let Some(inv) = cache.get(&(order, n)) {
        return Ok(inv);
    }
    let verts: Vec<Vec<f64>> = (0..=n)
        .map(|i| (1..=n).map(|m| if m == i { 1.0 } else { 0.0 }).collect())
        .collect();
    let refs: Vec<&[f64]> = verts.iter().map(|v| v.as_slice()).collect();
    let geom = ElementGeometry::from_vertices(&refs)?;
    let (space, raw) = NedelecSpace::without_basis(&geom, order)?;
    let m = space.m();
    let zero = ExpWeight::zero(n);
    let v = DMatrix::from_fn(m, m, |i, j| space.apply(i, &raw[j], &zero));
    let inv = DenseLu::factor(&v)?.solve_matrix(&DMatrix::identity(m, m));
    let inv: &'static DMatrix<f64> = Box::leak(Box::new(inv));
    cache.insert((order, n), inv);
    Ok(inv)
}

