//! Scheme-independent assembly pieces: scatter, mass, outflow, load vector,
//! Dirichlet data and elimination.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fem::{compute_element_geometry, dot, shape_values, ElementGeometry, LagrangeSpace, QuadratureRule};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{BoundaryRole, SimplicialMesh};
use crate::problem::SpaceTimeProblem;

/// Global system before Dirichlet conditions are imposed.
#[derive(Clone, Debug)]
pub struct RawSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<bool>,
    /// Prescribed values at Dirichlet DOFs (zero elsewhere).
    pub boundary_values: Vec<f64>,
}

/// System with Dirichlet rows replaced by identity rows and Dirichlet
/// columns moved to the right-hand side.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<bool>,
}

impl RawSystem {
    pub fn eliminate_dirichlet(&self) -> LinearSystem {
        let n = self.matrix.nrows();
        let mut rhs = self.rhs.clone();
        let mut triplets = Vec::with_capacity(self.matrix.nnz());
        for i in 0..n {
            if self.dirichlet[i] {
                triplets.push((i, i, 1.0));
                rhs[i] = self.boundary_values[i];
                continue;
            }
            let (cols, vals) = self.matrix.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if self.dirichlet[j] {
                    rhs[i] -= v * self.boundary_values[j];
                } else {
                    triplets.push((i, j, v));
                }
            }
        }
        LinearSystem {
            matrix: CsrMatrix::from_triplets(n, n, triplets),
            rhs,
            dirichlet: self.dirichlet.clone(),
        }
    }
}

/// Add `local[(j, i)]` to global entry `(dofs[j], dofs[i])`.
pub fn scatter(builder: &mut TripletBuilder, dofs: &[usize], local: &DMatrix<f64>) {
    for (j, &row) in dofs.iter().enumerate() {
        for (i, &col) in dofs.iter().enumerate() {
            let v = local[(j, i)];
            if v != 0.0 {
                builder.push(row, col, v);
            }
        }
    }
}

/// Element mass matrix `∫_T φ_i φ_j`; lumping puts row sums on the diagonal.
pub fn local_mass_matrix(geom: &ElementGeometry, order: usize, lumped: bool) -> DMatrix<f64> {
    let n = geom.dim();
    let mut m = if order == 1 {
        let c = geom.volume / ((n + 1) * (n + 2)) as f64;
        DMatrix::from_fn(n + 1, n + 1, |i, j| if i == j { 2.0 * c } else { c })
    } else {
        let rule = QuadratureRule::simplex(n, 2 * order);
        let k = crate::fem::local_dof_count(order, n);
        let mut m = DMatrix::zeros(k, k);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let phi = shape_values(order, lam);
            for j in 0..k {
                for i in 0..k {
                    m[(j, i)] += w * geom.volume * phi[j] * phi[i];
                }
            }
        }
        m
    };
    if lumped {
        let sums: Vec<f64> = m.row_iter().map(|r| r.sum()).collect();
        m.fill(0.0);
        for (i, s) in sums.into_iter().enumerate() {
            m[(i, i)] = s;
        }
    }
    m
}

/// `∫_Γout (b·n) u v` over outflow facets, `b` frozen at the facet barycenter.
pub fn add_outflow_term(
    builder: &mut TripletBuilder,
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    problem: &SpaceTimeProblem,
) -> Result<()> {
    let order = space.order();
    let n = mesh.dim();
    let rule = QuadratureRule::simplex(n - 1, 2 * order);
    for f in mesh.boundary_facets() {
        match f.role.ok_or(Error::UnclassifiedBoundary)? {
            BoundaryRole::OutflowFinal => {}
            _ => continue,
        }
        let normal = mesh.facet_normal(f);
        let area = mesh.facet_measure(f);
        let centroid: Vec<f64> = (0..n)
            .map(|k| f.vertices.iter().map(|&v| mesh.vertex(v)[k]).sum::<f64>() / f.vertices.len() as f64)
            .collect();
        let b = problem.coefficients_at(&centroid, 0.0).b;
        let bn = dot(&b, &normal);
        let dofs = space.local_dofs(f.element);
        let k = dofs.len();
        let mut local = DMatrix::zeros(k, k);
        for (mu, w) in rule.points.iter().zip(&rule.weights) {
            let lam = facet_to_element_barycentric(mu, f.local_face);
            let phi = shape_values(order, &lam);
            for j in 0..k {
                for i in 0..k {
                    local[(j, i)] += w * area * bn * phi[j] * phi[i];
                }
            }
        }
        scatter(builder, dofs, &local);
    }
    Ok(())
}

/// Insert a zero at `local_face` to lift facet barycentrics to the element.
pub fn facet_to_element_barycentric(mu: &[f64], local_face: usize) -> Vec<f64> {
    let mut lam = mu.to_vec();
    lam.insert(local_face, 0.0);
    lam
}

/// `∫ f φ_j` for every DOF.
pub fn load_vector(
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    f: &(dyn Fn(&[f64]) -> f64 + Send + Sync),
) -> Result<Vec<f64>> {
    let order = space.order();
    let rule = QuadratureRule::simplex(mesh.dim(), 2 * order + 2);
    let mut rhs = vec![0.0; space.num_dofs()];
    for e in 0..mesh.num_simplices() {
        let geom = compute_element_geometry(mesh, e)?;
        let dofs = space.local_dofs(e);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(&geom.map_point(lam)) * w * geom.volume;
            for (&d, p) in dofs.iter().zip(shape_values(order, lam)) {
                rhs[d] += fx * p;
            }
        }
    }
    Ok(rhs)
}

/// Dirichlet mask and nodal boundary values.
pub fn dirichlet_data(
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    problem: &SpaceTimeProblem,
) -> Result<(Vec<bool>, Vec<f64>)> {
    let mask = space.dirichlet_mask(mesh)?;
    let values = mask
        .iter()
        .enumerate()
        .map(|(i, &m)| if m { (problem.dirichlet)(space.node(i)) } else { 0.0 })
        .collect();
    Ok((mask, values))
}

/// Check the problem and mesh agree before assembly.
pub fn check_inputs(mesh: &SimplicialMesh, problem: &SpaceTimeProblem) -> Result<()> {
    problem.validate()?;
    if mesh.dim() != problem.dim() {
        return Err(Error::InvalidInput(format!(
            "mesh dimension {} does not match problem dimension {}",
            mesh.dim(),
            problem.dim()
        )));
    }
    if !mesh.is_classified() {
        return Err(Error::UnclassifiedBoundary);
    }
    Ok(())
}
