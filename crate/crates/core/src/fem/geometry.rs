use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Local endpoint indices, `start < end`.
    pub start: usize,
    pub end: usize,
    /// Unit vector from `start` to `end`.
    pub tangent: Vec<f64>,
    pub length: f64,
}

/// Affine data of one simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementGeometry {
    pub vertex_coords: Vec<Vec<f64>>,
    /// Edge vectors `x_m − x_0` as columns.
    pub jacobian: DMatrix<f64>,
    pub volume: f64,
    /// `∇λ_i` for every vertex `i`.
    pub lambda_grads: Vec<Vec<f64>>,
    /// All vertex pairs in the order (0,1),(0,2),…,(n−1,n).
    pub edges: Vec<Edge>,
    pub diameter: f64,
}

impl ElementGeometry {
    pub fn from_vertices(pts: &[&[f64]]) -> Result<Self> {
        let n = pts.len().saturating_sub(1);
        if n == 0 || pts.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidInput("a simplex in ℝⁿ needs n+1 points of length n".into()));
        }
        let jacobian = DMatrix::from_fn(n, n, |k, m| pts[m + 1][k] - pts[0][k]);
        let mut edges = Vec::with_capacity(n * (n + 1) / 2);
        for a in 0..=n {
            for b in a + 1..=n {
                let v: Vec<f64> = (0..n).map(|k| pts[b][k] - pts[a][k]).collect();
                let length = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                edges.push(Edge {
                    start: a,
                    end: b,
                    tangent: v.iter().map(|x| x / length).collect(),
                    length,
                });
            }
        }
        let diameter = edges.iter().map(|e| e.length).fold(0.0, f64::max);
        let det = jacobian.determinant();
        if !(det.abs() > 1e-14 * diameter.powi(n as i32)) {
            return Err(Error::DegenerateElement { element: usize::MAX, det });
        }
        let inv = jacobian
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateElement { element: usize::MAX, det })?;
        // Rows of B⁻¹ are ∇λ_1..∇λ_n; ∇λ_0 = −Σ.
        let mut lambda_grads = vec![vec![0.0; n]; n + 1];
        for m in 0..n {
            for k in 0..n {
                lambda_grads[m + 1][k] = inv[(m, k)];
                lambda_grads[0][k] -= inv[(m, k)];
            }
        }
        Ok(Self {
            vertex_coords: pts.iter().map(|p| p.to_vec()).collect(),
            jacobian,
            volume: det.abs() / crate::mesh::factorial(n) as f64,
            lambda_grads,
            edges,
            diameter,
        })
    }

    pub fn dim(&self) -> usize {
        self.vertex_coords.len() - 1
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|k| self.vertex_coords.iter().map(|p| p[k]).sum::<f64>() / (n + 1) as f64)
            .collect()
    }

    /// Physical point for barycentric coordinates `lambda`.
    pub fn map_point(&self, lambda: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for (l, p) in lambda.iter().zip(&self.vertex_coords) {
            for k in 0..n {
                x[k] += l * p[k];
            }
        }
        x
    }

    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut lam = vec![0.0; n + 1];
        let x0 = &self.vertex_coords[0];
        for i in 1..=n {
            lam[i] = (0..n).map(|k| self.lambda_grads[i][k] * (x[k] - x0[k])).sum();
        }
        lam[0] = 1.0 - lam[1..].iter().sum::<f64>();
        lam
    }
}

pub fn compute_element_geometry(mesh: &SimplicialMesh, element: usize) -> Result<ElementGeometry> {
    ElementGeometry::from_vertices(&mesh.simplex_coords(element)).map_err(|e| match e {
        Error::DegenerateElement { det, .. } => Error::DegenerateElement { element, det },
        other => other,
    })
}

/// `d_ji = |T| ∇λ_j · D ∇λ_i`, the P1 stiffness matrix for constant `D`.
pub fn local_diffusion_matrix(geom: &ElementGeometry, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = geom.dim();
    let k = n + 1;
    let g = &geom.lambda_grads;
    let mut out = DMatrix::zeros(k, k);
    for j in 0..k {
        for i in 0..k {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += g[j][a] * d[(a, b)] * g[i][b];
                }
            }
            out[(j, i)] = geom.volume * s;
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
