//! Conforming simplicial meshes of boxes, with boundary-role tagging.
//!
//! Coordinates are stored flat with stride `dim`; on space-time meshes the
//! last coordinate is time.

mod generate;
mod refine;

use std::collections::HashMap;

pub use generate::{build_box_mesh, perturb_vertices, space_time_box, steady_box};
pub use refine::uniform_refine;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryRole {
    /// Spatial boundary `∂Ω_s × (0, t_max)`; on steady meshes, every facet.
    DirichletLateral,
    /// The initial face `t = 0`.
    DirichletInitial,
    /// The final face `t = t_max`, closed with an outflow (Robin) condition.
    OutflowFinal,
}

impl BoundaryRole {
    pub fn is_dirichlet(self) -> bool {
        !matches!(self, BoundaryRole::OutflowFinal)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFacet {
    /// Facet vertices in the order they appear in the owning simplex.
    pub vertices: Vec<usize>,
    pub role: Option<BoundaryRole>,
    /// The unique simplex containing this facet.
    pub element: usize,
    /// Index of the simplex vertex opposite the facet.
    pub local_face: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    simplices: Vec<usize>,
    boundary_facets: Vec<BoundaryFacet>,
    /// `Some(t_max)` for space-time meshes, `None` for steady ones.
    t_max: Option<f64>,
}

impl SimplicialMesh {
    /// Build a mesh from raw arrays, orienting every simplex positively and
    /// extracting (unclassified) boundary facets.
    pub fn new(dim: usize, coords: Vec<f64>, mut simplices: Vec<usize>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidInput(format!("mesh dimension {dim} not in 1..=3")));
        }
        if !coords.len().is_multiple_of(dim) || !simplices.len().is_multiple_of(dim + 1) {
            return Err(Error::InvalidInput("coordinate/connectivity arrays have wrong stride".into()));
        }
        let nv = coords.len() / dim;
        if let Some(&bad) = simplices.iter().find(|&&v| v >= nv) {
            return Err(Error::InvalidInput(format!("vertex index {bad} out of range ({nv} vertices)")));
        }
        let k = dim + 1;
        for (e, s) in simplices.chunks_mut(k).enumerate() {
            let det = signed_det(dim, &coords, s);
            let scale = simplex_diameter(dim, &coords, s).powi(dim as i32);
            if det.abs() <= 1e-14 * scale {
                return Err(Error::DegenerateElement { element: e, det });
            }
            if det < 0.0 {
                s.swap(dim - 1, dim);
            }
        }
        let mut mesh = Self {
            dim,
            coords,
            simplices,
            boundary_facets: Vec::new(),
            t_max: None,
        };
        mesh.boundary_facets = mesh.extract_boundary()?;
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_simplices(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks(self.dim)
    }

    pub fn simplex(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.simplices[e * k..(e + 1) * k]
    }

    pub fn simplices(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.simplices.chunks(self.dim + 1)
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    pub fn t_max(&self) -> Option<f64> {
        self.t_max
    }

    pub fn is_classified(&self) -> bool {
        self.boundary_facets.iter().all(|f| f.role.is_some())
    }

    /// Coordinates of the vertices of simplex `e`.
    pub fn simplex_coords(&self, e: usize) -> Vec<&[f64]> {
        self.simplex(e).iter().map(|&v| self.vertex(v)).collect()
    }

    pub fn simplex_volume(&self, e: usize) -> f64 {
        let det = signed_det(self.dim, &self.coords, self.simplex(e));
        det / factorial(self.dim) as f64
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_simplices()).map(|e| self.simplex_volume(e)).sum()
    }

    /// Largest edge length of simplex `e`.
    pub fn simplex_diameter(&self, e: usize) -> f64 {
        simplex_diameter(self.dim, &self.coords, self.simplex(e))
    }

    /// Mesh size `h`: the largest edge length over all simplices.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_simplices())
            .map(|e| self.simplex_diameter(e))
            .fold(0.0, f64::max)
    }

    /// Mark each vertex lying on a Dirichlet facet.
    pub fn dirichlet_vertices(&self) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.num_vertices()];
        for f in &self.boundary_facets {
            let role = f.role.ok_or(Error::UnclassifiedBoundary)?;
            if role.is_dirichlet() {
                for &v in &f.vertices {
                    mask[v] = true;
                }
            }
        }
        Ok(mask)
    }

    /// Label facets of a space-time mesh by their time coordinates.
    ///
    /// Facets entirely at `t = 0` are initial, entirely at `t = t_max` are
    /// outflow, and everything else is lateral. A facet touching both time
    /// planes cannot occur on a valid box mesh and is an internal error.
    pub fn classify_boundary(mut self, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
        }
        if self.dim < 2 {
            return Err(Error::InvalidInput("a space-time mesh needs dimension ≥ 2".into()));
        }
        let tol = 1e-12 * t_max;
        let tdim = self.dim - 1;
        let mut roles = Vec::with_capacity(self.boundary_facets.len());
        for f in &self.boundary_facets {
            let times: Vec<f64> = f.vertices.iter().map(|&v| self.coords[v * self.dim + tdim]).collect();
            let at_start = times.iter().all(|t| t.abs() <= tol);
            let at_end = times.iter().all(|t| (t - t_max).abs() <= tol);
            let touches_start = times.iter().any(|t| t.abs() <= tol);
            let touches_end = times.iter().any(|t| (t - t_max).abs() <= tol);
            roles.push(if at_start {
                BoundaryRole::DirichletInitial
            } else if at_end {
                BoundaryRole::OutflowFinal
            } else if touches_start && touches_end && !self.facet_is_lateral(f) {
                return Err(Error::Internal(format!(
                    "boundary facet {:?} spans t = 0 and t = t_max",
                    f.vertices
                )));
            } else {
                BoundaryRole::DirichletLateral
            });
        }
        for (f, role) in self.boundary_facets.iter_mut().zip(roles) {
            f.role = Some(role);
        }
        self.t_max = Some(t_max);
        Ok(self)
    }

    /// Label every boundary facet Dirichlet (steady problems).
    pub fn classify_all_dirichlet(mut self) -> Self {
        for f in &mut self.boundary_facets {
            f.role = Some(BoundaryRole::DirichletLateral);
        }
        self.t_max = None;
        self
    }

    // A facet whose normal has no time component lies on the lateral boundary.
    fn facet_is_lateral(&self, f: &BoundaryFacet) -> bool {
        let n = self.facet_normal(f);
        n[self.dim - 1].abs() <= 1e-12 * n.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Outward unit normal of a boundary facet.
    pub fn facet_normal(&self, f: &BoundaryFacet) -> Vec<f64> {
        let s = self.simplex(f.element);
        let geom = crate::fem::ElementGeometry::from_vertices(
            &s.iter().map(|&v| self.vertex(v)).collect::<Vec<_>>(),
        )
        .expect("mesh simplices are nondegenerate");
        let g = &geom.lambda_grads[f.local_face];
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        g.iter().map(|v| -v / norm).collect()
    }

    /// Facet measure (length/area; 1 for points).
    pub fn facet_measure(&self, f: &BoundaryFacet) -> f64 {
        let pts: Vec<&[f64]> = f.vertices.iter().map(|&v| self.vertex(v)).collect();
        simplex_measure(&pts)
    }

    /// Global edge table: sorted vertex pairs in first-seen order, plus the
    /// per-simplex list of edge indices in local order (0,1),(0,2),...,(n-1,n).
    pub fn edges(&self) -> (Vec<[usize; 2]>, Vec<Vec<usize>>) {
        let mut index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut per_simplex = Vec::with_capacity(self.num_simplices());
        for s in self.simplices() {
            let mut local = Vec::with_capacity(s.len() * (s.len() - 1) / 2);
            for a in 0..s.len() {
                for b in a + 1..s.len() {
                    let key = if s[a] < s[b] { [s[a], s[b]] } else { [s[b], s[a]] };
                    let id = *index.entry(key).or_insert_with(|| {
                        edges.push(key);
                        edges.len() - 1
                    });
                    local.push(id);
                }
            }
            per_simplex.push(local);
        }
        (edges, per_simplex)
    }

    /// Every facet must be shared by one (boundary) or two (interior) simplices.
    pub fn check_conformity(&self) -> Result<()> {
        for (key, owners) in self.facet_incidence() {
            if owners.len() > 2 {
                return Err(Error::Internal(format!(
                    "facet {key:?} shared by {} simplices",
                    owners.len()
                )));
            }
        }
        Ok(())
    }

    /// Map from sorted facet vertices to `(simplex, local_face)` owners.
    fn facet_incidence(&self) -> HashMap<Vec<usize>, Vec<(usize, usize)>> {
        let mut map: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        for (e, s) in self.simplices().enumerate() {
            for skip in 0..s.len() {
                let mut key: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                key.sort_unstable();
                map.entry(key).or_default().push((e, skip));
            }
        }
        map
    }

    fn extract_boundary(&self) -> Result<Vec<BoundaryFacet>> {
        let mut facets = Vec::new();
        for (key, owners) in self.facet_incidence() {
            match owners[..] {
                [(element, local_face)] => {
                    let s = self.simplex(element);
                    let vertices = s.iter().enumerate().filter(|&(i, _)| i != local_face).map(|(_, &v)| v).collect();
                    facets.push(BoundaryFacet {
                        vertices,
                        role: None,
                        element,
                        local_face,
                    });
                }
                [_, _] => {}
                _ => {
                    return Err(Error::Internal(format!(
                        "facet {key:?} shared by {} simplices",
                        owners.len()
                    )))
                }
            }
        }
        facets.sort_by_key(|f| (f.element, f.local_face));
        Ok(facets)
    }

    /// Delaunay test for 2D meshes: across every interior edge the two
    /// opposite angles sum to at most π (relative slack `tol`).
    pub fn is_delaunay(&self, tol: f64) -> Result<bool> {
        if self.dim != 2 {
            return Err(Error::Unsupported("Delaunay check is implemented for 2D meshes only".into()));
        }
        for owners in self.facet_incidence().into_values() {
            if let [(e1, f1), (e2, f2)] = owners[..] {
                let angle = |e: usize, f: usize| {
                    let s = self.simplex(e);
                    let apex = self.vertex(s[f]);
                    let others: Vec<&[f64]> = (0..3).filter(|&i| i != f).map(|i| self.vertex(s[i])).collect();
                    let u = [others[0][0] - apex[0], others[0][1] - apex[1]];
                    let v = [others[1][0] - apex[0], others[1][1] - apex[1]];
                    let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                    cos.clamp(-1.0, 1.0).acos()
                };
                if angle(e1, f1) + angle(e2, f2) > std::f64::consts::PI * (1.0 + tol) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub(crate) fn from_parts(dim: usize, coords: Vec<f64>, simplices: Vec<usize>, t_max: Option<f64>) -> Result<Self> {
        let mesh = Self::new(dim, coords, simplices)?;
        match t_max {
            Some(t) => mesh.classify_boundary(t),
            None => Ok(mesh.classify_all_dirichlet()),
        }
    }
}

pub(crate) fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn signed_det(dim: usize, coords: &[f64], s: &[usize]) -> f64 {
    let p = |v: usize, k: usize| coords[s[v] * dim + k];
    let e = |v: usize, k: usize| p(v, k) - p(0, k);
    match dim {
        1 => e(1, 0),
        2 => e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0),
        3 => {
            e(1, 0) * (e(2, 1) * e(3, 2) - e(2, 2) * e(3, 1)) - e(1, 1) * (e(2, 0) * e(3, 2) - e(2, 2) * e(3, 0))
                + e(1, 2) * (e(2, 0) * e(3, 1) - e(2, 1) * e(3, 0))
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

fn simplex_diameter(dim: usize, coords: &[f64], s: &[usize]) -> f64 {
    let mut h: f64 = 0.0;
    for a in 0..s.len() {
        for b in a + 1..s.len() {
            let d2: f64 = (0..dim)
                .map(|k| (coords[s[a] * dim + k] - coords[s[b] * dim + k]).powi(2))
                .sum();
            h = h.max(d2.sqrt());
        }
    }
    h
}

/// k-dimensional measure of a simplex given by k+1 points in ℝⁿ, via the
/// Gram determinant of its edge vectors.
pub fn simplex_measure(pts: &[&[f64]]) -> f64 {
    let k = pts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect())
        .collect();
    let gram = nalgebra::DMatrix::from_fn(k, k, |i, j| edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum::<f64>());
    gram.determinant().max(0.0).sqrt() / factorial(k) as f64
}
