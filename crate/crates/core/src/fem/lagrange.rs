//! Continuous P1/P2 Lagrange spaces.
//!
//! Local node order: the n+1 vertices, then (for P2) edge midpoints in the
//! order (0,1),(0,2),…,(n−1,n).

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::geometry::ElementGeometry;
use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;

#[derive(Clone, Debug)]
pub struct LagrangeSpace {
    order: usize,
    dim: usize,
    local_count: usize,
    element_dofs: Vec<usize>,
    nodes: Vec<f64>,
    /// Sorted vertex pair → global edge index (P2 only).
    edge_index: HashMap<[usize; 2], usize>,
}

pub fn local_dof_count(order: usize, dim: usize) -> usize {
    match order {
        1 => dim + 1,
        _ => (dim + 1) * (dim + 2) / 2,
    }
}

impl LagrangeSpace {
    pub fn new(mesh: &SimplicialMesh, order: usize) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(Error::Unsupported(format!("Lagrange order {order} (supported: 1, 2)")));
        }
        let dim = mesh.dim();
        let nv = mesh.num_vertices();
        let local_count = local_dof_count(order, dim);
        let mut nodes: Vec<f64> = mesh.vertices().flatten().copied().collect();
        let mut element_dofs = Vec::with_capacity(mesh.num_simplices() * local_count);
        let mut edge_index = HashMap::new();
        if order == 1 {
            for s in mesh.simplices() {
                element_dofs.extend_from_slice(s);
            }
        } else {
            let (edges, per_simplex) = mesh.edges();
            for &[a, b] in &edges {
                for k in 0..dim {
                    nodes.push(0.5 * (mesh.vertex(a)[k] + mesh.vertex(b)[k]));
                }
            }
            for (id, &e) in edges.iter().enumerate() {
                edge_index.insert(e, id);
            }
            for (s, local_edges) in mesh.simplices().zip(&per_simplex) {
                element_dofs.extend_from_slice(s);
                element_dofs.extend(local_edges.iter().map(|&e| nv + e));
            }
        }
        Ok(Self {
            order,
            dim,
            local_count,
            element_dofs,
            nodes,
            edge_index,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_dofs(&self) -> usize {
        self.nodes.len() / self.dim
    }

    pub fn local_count(&self) -> usize {
        self.local_count
    }

    pub fn local_dofs(&self, element: usize) -> &[usize] {
        &self.element_dofs[element * self.local_count..(element + 1) * self.local_count]
    }

    pub fn node(&self, dof: usize) -> &[f64] {
        &self.nodes[dof * self.dim..(dof + 1) * self.dim]
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.num_dofs()).map(|i| f(self.node(i))).collect()
    }

    /// Mask of DOFs lying on Dirichlet facets.
    pub fn dirichlet_mask(&self, mesh: &SimplicialMesh) -> Result<Vec<bool>> {
        let nv = mesh.num_vertices();
        let mut mask = vec![false; self.num_dofs()];
        for f in mesh.boundary_facets() {
            let role = f.role.ok_or(Error::UnclassifiedBoundary)?;
            if !role.is_dirichlet() {
                continue;
            }
            for &v in &f.vertices {
                mask[v] = true;
            }
            if self.order == 2 {
                for a in 0..f.vertices.len() {
                    for b in a + 1..f.vertices.len() {
                        let (u, v) = (f.vertices[a], f.vertices[b]);
                        let key = if u < v { [u, v] } else { [v, u] };
                        mask[nv + self.edge_index[&key]] = true;
                    }
                }
            }
        }
        Ok(mask)
    }

    /// Local DOFs (indices into the element's local list) on facet
    /// `local_face` (the face opposite vertex `local_face`).
    pub fn facet_local_dofs(&self, local_face: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..=self.dim).filter(|&i| i != local_face).collect();
        if self.order == 2 {
            for (k, (a, b)) in local_edges(self.dim).into_iter().enumerate() {
                if a != local_face && b != local_face {
                    out.push(self.dim + 1 + k);
                }
            }
        }
        out
    }
}

/// Local vertex pairs in edge order.
pub fn local_edges(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..=dim {
        for b in a + 1..=dim {
            out.push((a, b));
        }
    }
    out
}

pub fn shape_values(order: usize, lambda: &[f64]) -> Vec<f64> {
    if order == 1 {
        return lambda.to_vec();
    }
    let dim = lambda.len() - 1;
    let mut out: Vec<f64> = lambda.iter().map(|l| l * (2.0 * l - 1.0)).collect();
    for (a, b) in local_edges(dim) {
        out.push(4.0 * lambda[a] * lambda[b]);
    }
    out
}

pub fn shape_gradients(order: usize, lambda: &[f64], geom: &ElementGeometry) -> Vec<Vec<f64>> {
    let g = &geom.lambda_grads;
    if order == 1 {
        return g.clone();
    }
    let dim = lambda.len() - 1;
    let mut out: Vec<Vec<f64>> = (0..=dim)
        .map(|i| g[i].iter().map(|v| (4.0 * lambda[i] - 1.0) * v).collect())
        .collect();
    for (a, b) in local_edges(dim) {
        out.push((0..dim).map(|k| 4.0 * (lambda[a] * g[b][k] + lambda[b] * g[a][k])).collect());
    }
    out
}

/// Hessians of the local basis (constant on the element).
pub fn shape_hessians(order: usize, geom: &ElementGeometry) -> Vec<DMatrix<f64>> {
    let dim = geom.dim();
    let g = &geom.lambda_grads;
    let outer = |u: &[f64], v: &[f64]| DMatrix::from_fn(dim, dim, |i, j| u[i] * v[j]);
    if order == 1 {
        return vec![DMatrix::zeros(dim, dim); dim + 1];
    }
    let mut out: Vec<DMatrix<f64>> = (0..=dim).map(|i| outer(&g[i], &g[i]) * 4.0).collect();
    for (a, b) in local_edges(dim) {
        out.push((outer(&g[a], &g[b]) + outer(&g[b], &g[a])) * 4.0);
    }
    out
}

/// Barycentric coordinates of the local Lagrange nodes.
pub fn local_nodes(order: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..=dim)
        .map(|i| (0..=dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if order == 2 {
        for (a, b) in local_edges(dim) {
            let mut l = vec![0.0; dim + 1];
            l[a] = 0.5;
            l[b] = 0.5;
            out.push(l);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_functions_are_nodal_and_sum_to_one() {
        for dim in 1..=3 {
            for order in 1..=2 {
                let nodes = local_nodes(order, dim);
                for (i, l) in nodes.iter().enumerate() {
                    let v = shape_values(order, l);
                    for (j, vj) in v.iter().enumerate() {
                        assert!((vj - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
                    }
                }
                let l: Vec<f64> = (0..=dim).map(|i| (i + 1) as f64).collect();
                let s: f64 = l.iter().sum();
                let l: Vec<f64> = l.iter().map(|x| x / s).collect();
                assert!((shape_values(order, &l).iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn p2_gradients_match_finite_differences() {
        let geom = ElementGeometry::from_vertices(&[&[0.1, 0.0], &[1.0, 0.2], &[0.3, 0.9]]).unwrap();
        let x = [0.4, 0.35];
        let lam = geom.barycentric(&x);
        let grads = shape_gradients(2, &lam, &geom);
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let vp = shape_values(2, &geom.barycentric(&xp));
            let vm = shape_values(2, &geom.barycentric(&xm));
            for j in 0..6 {
                let fd = (vp[j] - vm[j]) / (2.0 * h);
                assert!((fd - grads[j][k]).abs() < 1e-8);
            }
        }
    }
}
