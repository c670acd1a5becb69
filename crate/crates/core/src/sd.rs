//! Streamline-diffusion (Petrov–Galerkin) assembly for constant coefficients.
//!
//! Test functions are `v + δ_T b·∇v` with `δ_T = θ h_T^p ν`, where
//! `b = (β, 1)` is the space-time flow direction, `ν = 1/√(|β|² + 1)` and
//! `h_T` is the element diameter.

use nalgebra::DMatrix;

use crate::assembly::{check_inputs, dirichlet_data, facet_to_element_barycentric, scatter, LinearSystem, RawSystem};
use crate::error::{Error, Result};
use crate::fem::{
    compute_element_geometry, dot, local_dof_count, shape_gradients, shape_hessians, shape_values, ElementGeometry,
    LagrangeSpace, QuadratureRule,
};
use crate::linalg::TripletBuilder;
use crate::mesh::{BoundaryRole, SimplicialMesh};
use crate::problem::SpaceTimeProblem;

pub const DEFAULT_THETA: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq)]
pub struct SdParameters {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub theta: f64,
    pub order: usize,
    /// Whether the last coordinate is time (adds the unit time component to `b`).
    pub space_time: bool,
}

/// Power of `h` in the stabilization: 1 for linear elements or pure
/// convection, 2 otherwise.
pub fn sd_select_p(order: usize, alpha: f64) -> i32 {
    if order == 1 || alpha == 0.0 {
        1
    } else {
        2
    }
}

impl SdParameters {
    pub fn from_problem(problem: &SpaceTimeProblem, theta: f64, order: usize) -> Result<Self> {
        let (alpha, beta, gamma) = problem.constant_isotropic()?;
        let params = Self {
            alpha,
            beta,
            gamma,
            theta,
            order,
            space_time: !problem.is_steady(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.order) {
            return Err(Error::Unsupported(format!("streamline diffusion order {}", self.order)));
        }
        if !(self.alpha >= 0.0) || !(self.gamma >= 0.0) || !(self.theta >= 0.0) {
            return Err(Error::InvalidCoefficient("alpha, gamma and theta must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn p(&self) -> i32 {
        sd_select_p(self.order, self.alpha)
    }

    pub fn nu(&self) -> f64 {
        1.0 / (dot(&self.beta, &self.beta) + 1.0).sqrt()
    }

    /// Flow direction `b`.
    pub fn b(&self) -> Vec<f64> {
        let mut b = self.beta.clone();
        if self.space_time {
            b.push(1.0);
        }
        b
    }

    /// Diffusion tensor of the full coordinate vector (zero in time).
    pub fn diffusion(&self) -> DMatrix<f64> {
        let ds = self.beta.len();
        let n = ds + usize::from(self.space_time);
        DMatrix::from_fn(n, n, |i, j| if i == j && i < ds { self.alpha } else { 0.0 })
    }

    /// `δ_T = θ h^p ν`.
    pub fn delta(&self, h: f64) -> f64 {
        self.theta * h.powi(self.p()) * self.nu()
    }
}

/// Per-quadrature-point data shared by matrix and rhs assembly.
struct PointData {
    weight: f64,
    phi: Vec<f64>,
    grads: Vec<Vec<f64>>,
    /// `b·∇φ_i`.
    streamline: Vec<f64>,
}

fn point_data(geom: &ElementGeometry, order: usize, b: &[f64]) -> Vec<PointData> {
    let rule = QuadratureRule::simplex(geom.dim(), 2 * order + 2);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(lam, w)| {
            let grads = shape_gradients(order, lam, geom);
            let streamline = grads.iter().map(|g| dot(b, g)).collect();
            PointData {
                weight: w * geom.volume,
                phi: shape_values(order, lam),
                grads,
                streamline,
            }
        })
        .collect()
}

/// Local matrix of `B_h(u, v)` on one element, row = test, column = trial.
pub fn local_sd_matrix(geom: &ElementGeometry, params: &SdParameters, h: f64) -> DMatrix<f64> {
    let order = params.order;
    let k = local_dof_count(order, geom.dim());
    let b = params.b();
    let d = params.diffusion();
    let delta = params.delta(h);
    // −div(D∇φ_i) is constant per element (zero for P1).
    let div_flux: Vec<f64> = shape_hessians(order, geom)
        .iter()
        .map(|hess| -d.component_mul(hess).sum())
        .collect();
    let mut a = DMatrix::zeros(k, k);
    for pt in point_data(geom, order, &b) {
        for j in 0..k {
            let dgj = &d * nalgebra::DVector::from_column_slice(&pt.grads[j]);
            for i in 0..k {
                let lu = pt.streamline[i] + params.gamma * pt.phi[i] + div_flux[i];
                let galerkin = dot(dgj.as_slice(), &pt.grads[i]) + (pt.streamline[i] + params.gamma * pt.phi[i]) * pt.phi[j];
                a[(j, i)] += pt.weight * (galerkin + delta * lu * pt.streamline[j]);
            }
        }
    }
    a
}

pub fn assemble_sd_raw(mesh: &SimplicialMesh, problem: &SpaceTimeProblem, params: &SdParameters) -> Result<RawSystem> {
    check_inputs(mesh, problem)?;
    params.validate()?;
    let order = params.order;
    let space = LagrangeSpace::new(mesh, order)?;
    let n = space.num_dofs();
    let b = params.b();
    let k = space.local_count();
    let mut builder = TripletBuilder::with_capacity(n, n, mesh.num_simplices() * k * k);
    let mut rhs = vec![0.0; n];
    let rule = QuadratureRule::simplex(mesh.dim(), 2 * order + 2);
    for e in 0..mesh.num_simplices() {
        let geom = compute_element_geometry(mesh, e)?;
        let h = geom.diameter;
        scatter(&mut builder, space.local_dofs(e), &local_sd_matrix(&geom, params, h));
        let delta = params.delta(h);
        let dofs = space.local_dofs(e);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let f = (problem.source)(&geom.map_point(lam)) * w * geom.volume;
            let phi = shape_values(order, lam);
            let grads = shape_gradients(order, lam, &geom);
            for j in 0..k {
                rhs[dofs[j]] += f * (phi[j] + delta * dot(&b, &grads[j]));
            }
        }
    }
    let (dirichlet, boundary_values) = dirichlet_data(mesh, &space, problem)?;
    Ok(RawSystem {
        matrix: builder.build(),
        rhs,
        dirichlet,
        boundary_values,
    })
}

pub fn assemble_sd(mesh: &SimplicialMesh, problem: &SpaceTimeProblem, params: &SdParameters) -> Result<LinearSystem> {
    Ok(assemble_sd_raw(mesh, problem, params)?.eliminate_dirichlet())
}

/// `⦀u⦀² = ‖u(t_max)‖² + Σ_T ∫_T α|∇ₓu|² + h_T^p ν (b·∇u)² + γu²`; returns
/// the square root. The final-time trace is integrated over outflow facets.
pub fn energy_norm(mesh: &SimplicialMesh, u: &[f64], params: &SdParameters) -> Result<f64> {
    let order = params.order;
    let space = LagrangeSpace::new(mesh, order)?;
    let b = params.b();
    let ds = params.beta.len();
    let mut total = 0.0;
    for e in 0..mesh.num_simplices() {
        let geom = compute_element_geometry(mesh, e)?;
        let scale = geom.diameter.powi(params.p()) * params.nu();
        let dofs = space.local_dofs(e);
        for pt in point_data(&geom, order, &b) {
            let val: f64 = dofs.iter().zip(&pt.phi).map(|(&d, p)| u[d] * p).sum();
            let stream: f64 = dofs.iter().zip(&pt.streamline).map(|(&d, s)| u[d] * s).sum();
            let grad_x: f64 = (0..ds)
                .map(|m| dofs.iter().zip(&pt.grads).map(|(&d, g)| u[d] * g[m]).sum::<f64>().powi(2))
                .sum();
            total += pt.weight * (params.alpha * grad_x + scale * stream * stream + params.gamma * val * val);
        }
    }
    let facet_rule = QuadratureRule::simplex(mesh.dim() - 1, 2 * order);
    for f in mesh.boundary_facets() {
        if f.role != Some(BoundaryRole::OutflowFinal) {
            continue;
        }
        let area = mesh.facet_measure(f);
        let dofs = space.local_dofs(f.element);
        for (mu, w) in facet_rule.points.iter().zip(&facet_rule.weights) {
            let phi = shape_values(order, &facet_to_element_barycentric(mu, f.local_face));
            let val: f64 = dofs.iter().zip(&phi).map(|(&d, p)| u[d] * p).sum();
            total += w * area * val * val;
        }
    }
    Ok(total.sqrt())
}
