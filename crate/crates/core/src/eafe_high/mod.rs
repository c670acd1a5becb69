//! General-order exponentially fitted assembly.
//!
//! On each element the flux `J = D∇u − bu` satisfies
//! `e^{−q·x} D⁻¹ J = ∇(e^{−q·x} u)`. Applying the Nédélec degrees of freedom
//! to both sides gives `Z c = d`, with `Z_jk = η_j(e^{−q·x} D⁻¹ φ_k)` and
//! `d_j = η_j(∇(e^{−q·x} u_I)_I)`. The recovered flux is sought in
//! `(P_{r−1})ⁿ = span P`, so only the `M0 × M0` system
//! `P*ZP c̃ = P*d` is solved, where `P*` is a weighted adjoint `PᵀΛ`.
//!
//! Rows are evaluated with a per-DOF exponent shift (the peak of the weight
//! on the DOF's support), so nothing overflows for large `|q| h`.

mod expint;
mod nedelec;
mod poly;

use nalgebra::DMatrix;

pub use expint::{decaying_moments, exp_poly_segment, exp_poly_simplex};
pub use nedelec::{DofFunctional, DofKind, ExpWeight, NedelecSpace};
pub use poly::{vec_combination, vec_eval, vec_transform, Poly, VecPoly};

use crate::assembly::{
    add_outflow_term, check_inputs, dirichlet_data, load_vector, local_mass_matrix, scatter, LinearSystem, RawSystem,
};
use crate::eafe_low::EafeCoefficients;
use crate::error::{Error, Result};
use crate::fem::{compute_element_geometry, local_edges, ElementGeometry, LagrangeSpace, QuadratureRule};
use crate::linalg::{DenseLu, TripletBuilder};
use crate::mesh::SimplicialMesh;
use crate::problem::SpaceTimeProblem;

/// Largest accepted condition estimate of `P*ZP`.
pub const UNISOLVENCE_CONDITION_LIMIT: f64 = 1e12;

/// Index of local edge `(a, b)`, `a < b`, in the order (0,1),(0,2),…
pub(crate) fn edge_index(n: usize, a: usize, b: usize) -> usize {
    local_edges(n).iter().position(|&e| e == (a, b)).expect("valid local edge")
}

/// Row weights `Λ` in the adjoint `P* = PᵀΛ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjointWeighting {
    /// `Λ = I`: the plain transpose.
    Euclidean,
    /// `Λ_j = 1 / mean(e^{−q·x})` over the support of DOF `j`.
    Normalized,
    /// Order 1 only: `Λ_e = ω_e / mean_e(e^{−q·x})` with
    /// `ω_e = −|T| ∇λ_a·D∇λ_b`. Reproduces the Bernoulli edge scheme exactly.
    EdgeHarmonic,
}

impl AdjointWeighting {
    pub fn default_for(order: usize) -> Self {
        if order == 1 {
            AdjointWeighting::EdgeHarmonic
        } else {
            AdjointWeighting::Normalized
        }
    }
}

/// Origin of the exponent `−q·(x − origin)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum ExponentOrigin {
    #[default]
    Barycenter,
    Point(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HighOrderOptions {
    pub order: usize,
    /// `None` picks [`AdjointWeighting::default_for`].
    pub adjoint: Option<AdjointWeighting>,
    pub origin: ExponentOrigin,
    pub lumped_mass: bool,
}

impl HighOrderOptions {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            adjoint: None,
            origin: ExponentOrigin::Barycenter,
            lumped_mass: false,
        }
    }

    pub fn adjoint(&self) -> AdjointWeighting {
        self.adjoint.unwrap_or(AdjointWeighting::default_for(self.order))
    }
}

/// Flux recovery data of one element.
#[derive(Clone, Debug)]
pub struct FluxRecovery {
    pub space: NedelecSpace,
    /// `p_jk = η_j(ψ_k)`.
    pub p: DMatrix<f64>,
    /// `Z` with row `j` scaled by `e^{−shift_j}`.
    pub z_scaled: DMatrix<f64>,
    pub shifts: Vec<f64>,
    /// Diagonal of `Λ`, already including the row scaling.
    pub adjoint_weights: Vec<f64>,
    /// `P*ZP`.
    pub system: DMatrix<f64>,
    pub condition: f64,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    factor: DenseLu,
    weight: ExpWeight,
    /// `η_j(∇ξ_m)` for the Lagrange basis `ξ_m`, zero off the DOF support.
    lagrange_dofs: DMatrix<f64>,
    /// `ℓ` at the Lagrange nodes.
    node_exponents: Vec<f64>,
}

impl FluxRecovery {
    pub fn new(geom: &ElementGeometry, coeff: &EafeCoefficients, opts: &HighOrderOptions) -> Result<Self> {
        let order = opts.order;
        let space = NedelecSpace::build(geom, order)?;
        let (m, m0, n) = (space.m(), space.m0(), space.dim);
        let zero = ExpWeight::zero(n);
        let p = DMatrix::from_fn(m, m0, |j, k| space.apply(j, &space.psi[k], &zero));
        if p.clone().svd(false, false).rank(1e-12 * p.norm()) < m0 {
            return Err(Error::Internal("embedding matrix P is rank deficient".into()));
        }

        let origin = match &opts.origin {
            ExponentOrigin::Barycenter => space.center.clone(),
            ExponentOrigin::Point(o) => o.clone(),
        };
        let qdot = |x: &[f64], y: &[f64]| -> f64 { coeff.q.iter().zip(x.iter().zip(y)).map(|(q, (a, b))| q * (a - b)).sum() };
        let x0 = &geom.vertex_coords[0];
        let weight = ExpWeight {
            offset: -qdot(x0, &origin),
            slope: (1..=n).map(|m| -qdot(&geom.vertex_coords[m], x0)).collect(),
        };
        let shifts: Vec<f64> = (0..m).map(|j| space.support_peak(j, &weight)).collect();
        let d_inv = coeff
            .d
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidCoefficient("diffusion matrix is singular".into()))?;
        let d_inv_phi: Vec<VecPoly> = space.basis.iter().map(|phi| vec_transform(&d_inv, phi)).collect();
        let z_scaled = DMatrix::from_fn(m, m, |j, k| space.apply_shifted(j, &d_inv_phi[k], &weight, shifts[j]));

        let adjoint = opts.adjoint();
        let adjoint_weights: Vec<f64> = match adjoint {
            AdjointWeighting::Euclidean => {
                let peak = shifts.iter().copied().fold(f64::MIN, f64::max);
                let spread = peak - shifts.iter().copied().fold(f64::MAX, f64::min);
                if spread > 700.0 {
                    return Err(Error::CoefficientOutOfRange {
                        element: usize::MAX,
                        exponent: spread,
                    });
                }
                shifts.iter().map(|s| (s - peak).exp()).collect()
            }
            AdjointWeighting::Normalized => (0..m).map(|j| 1.0 / space.weight_mean(j, &weight, shifts[j])).collect(),
            AdjointWeighting::EdgeHarmonic => {
                if order != 1 {
                    return Err(Error::Unsupported("edge-harmonic adjoint needs order 1".into()));
                }
                let dmat = crate::fem::local_diffusion_matrix(geom, &coeff.d);
                (0..m)
                    .map(|j| {
                        let DofKind::Edge { a, b, .. } = space.dofs[j].kind else {
                            unreachable!("order 1 has edge DOFs only")
                        };
                        -dmat[(a, b)] / space.weight_mean(j, &weight, shifts[j])
                    })
                    .collect()
            }
        };
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(adjoint_weights.clone()));
        let system = p.transpose() * &lam * &z_scaled * &p;
        let (row_scale, col_scale) = equilibrate(&system);
        let balanced = DMatrix::from_fn(m0, m0, |i, k| row_scale[i] * system[(i, k)] * col_scale[k]);
        let factor = DenseLu::factor(&balanced).map_err(|_| Error::Unisolvence {
            element: usize::MAX,
            condition: f64::INFINITY,
        })?;
        let condition = factor.condition_estimate();
        if !(condition < UNISOLVENCE_CONDITION_LIMIT) {
            return Err(Error::Unisolvence {
                element: usize::MAX,
                condition,
            });
        }

        let (basis, nodes) = lagrange_in_frame(&space, order);
        let lagrange_dofs = DMatrix::from_fn(m, basis.len(), |j, node| {
            if !node_on_support(n, node, &space.dofs[j].support) {
                return 0.0;
            }
            space.apply(j, &space.physical_gradient(&basis[node]), &zero)
        });
        let node_exponents = nodes.iter().map(|z| weight.eval(z)).collect();
        Ok(Self {
            space,
            p,
            z_scaled,
            shifts,
            adjoint_weights,
            system,
            row_scale,
            col_scale,
            condition,
            factor,
            weight,
            lagrange_dofs,
            node_exponents,
        })
    }

    pub fn weight(&self) -> &ExpWeight {
        &self.weight
    }

    /// Scaled `d` for Lagrange nodal values `u` (local order).
    pub fn compute_d(&self, u: &[f64]) -> Vec<f64> {
        (0..self.space.m())
            .map(|j| {
                u.iter()
                    .enumerate()
                    .map(|(node, &val)| {
                        let g = self.lagrange_dofs[(j, node)];
                        if g == 0.0 {
                            0.0
                        } else {
                            g * (self.node_exponents[node] - self.shifts[j]).exp() * val
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// Scaled `G(J)_j = η_j(e^{−q·x} D⁻¹ J)` evaluated directly from a
    /// polynomial flux field.
    pub fn g_of_flux(&self, d_inv_flux: &VecPoly) -> Vec<f64> {
        (0..self.space.m())
            .map(|j| self.space.apply_shifted(j, d_inv_flux, &self.weight, self.shifts[j]))
            .collect()
    }

    /// Solve `P*ZP c̃ = P*d` for the coefficients of `J_T` in the `ψ` basis.
    pub fn recover(&self, d_scaled: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = (0..self.space.m0())
            .map(|k| {
                (0..self.space.m())
                    .map(|j| self.p[(j, k)] * self.adjoint_weights[j] * d_scaled[j])
                    .sum::<f64>()
                    * self.row_scale[k]
            })
            .collect();
        let y = self.factor.solve(&rhs);
        y.iter().zip(&self.col_scale).map(|(v, c)| v * c).collect()
    }

    pub fn flux_field(&self, coeffs: &[f64]) -> VecPoly {
        vec_combination(&self.space.psi, coeffs)
    }

    /// `A_T[j][m] = ∫_T J_T(ξ_m) · ∇ξ_j`.
    pub fn local_matrix(&self, geom: &ElementGeometry) -> DMatrix<f64> {
        let order = self.space.order;
        let (basis, _) = lagrange_in_frame(&self.space, order);
        let k = basis.len();
        let rule = QuadratureRule::simplex(self.space.dim, 2 * order);
        let grads: Vec<VecPoly> = basis.iter().map(|b| self.space.physical_gradient(b)).collect();
        let mut a = DMatrix::zeros(k, k);
        let mut unit = vec![0.0; k];
        for m in 0..k {
            unit.fill(0.0);
            unit[m] = 1.0;
            let flux = self.flux_field(&self.recover(&self.compute_d(&unit)));
            for (lam, w) in rule.points.iter().zip(&rule.weights) {
                let z = &lam[1..];
                let jv = vec_eval(&flux, z);
                for j in 0..k {
                    let gj = vec_eval(&grads[j], z);
                    let dotv: f64 = jv.iter().zip(&gj).map(|(x, y)| x * y).sum();
                    a[(j, m)] += w * geom.volume * dotv;
                }
            }
        }
        a
    }
}

/// Lagrange basis of the given order as polynomials in the element frame,
/// with node positions (vertices, then edge midpoints).
/// Power-of-two row then column scalings that bring every row and column
/// max-norm near one.
fn equilibrate(a: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let pow2 = |v: f64| if v > 0.0 { 2f64.powi(-(v.log2().round() as i32)) } else { 1.0 };
    let rows: Vec<f64> = a.row_iter().map(|r| pow2(r.amax())).collect();
    let cols: Vec<f64> = (0..a.ncols())
        .map(|k| pow2((0..a.nrows()).map(|i| (rows[i] * a[(i, k)]).abs()).fold(0.0, f64::max)))
        .collect();
    (rows, cols)
}

fn lagrange_in_frame(space: &NedelecSpace, order: usize) -> (Vec<Poly>, Vec<Vec<f64>>) {
    let n = space.dim;
    let lam = &space.lambda;
    let mut basis: Vec<Poly> = Vec::new();
    let mut nodes: Vec<Vec<f64>> = space.z_vertices.clone();
    if order == 1 {
        basis.extend(lam.iter().cloned());
    } else {
        for l in lam {
            basis.push(l * &(l.clone() * 2.0 - Poly::constant(n, 1.0)));
        }
        for (a, b) in local_edges(n) {
            basis.push((&lam[a] * &lam[b]) * 4.0);
            let (za, zb) = (&space.z_vertices[a], &space.z_vertices[b]);
            nodes.push(za.iter().zip(zb).map(|(x, y)| 0.5 * (x + y)).collect());
        }
    }
    (basis, nodes)
}

fn node_on_support(n: usize, node: usize, support: &[usize]) -> bool {
    if node <= n {
        support.contains(&node)
    } else {
        let (a, b) = local_edges(n)[node - n - 1];
        support.contains(&a) && support.contains(&b)
    }
}

/// Local matrix of the general-order scheme on one element.
pub fn local_high_order_matrix(
    geom: &ElementGeometry,
    coeff: &EafeCoefficients,
    opts: &HighOrderOptions,
) -> Result<DMatrix<f64>> {
    Ok(FluxRecovery::new(geom, coeff, opts)?.local_matrix(geom))
}

pub fn assemble_high_order_raw(
    mesh: &SimplicialMesh,
    problem: &SpaceTimeProblem,
    opts: &HighOrderOptions,
) -> Result<RawSystem> {
    check_inputs(mesh, problem)?;
    let space = LagrangeSpace::new(mesh, opts.order)?;
    let n = space.num_dofs();
    let k = space.local_count();
    let mut builder = TripletBuilder::with_capacity(n, n, mesh.num_simplices() * k * k);
    for e in 0..mesh.num_simplices() {
        let geom = compute_element_geometry(mesh, e)?;
        let coeff = EafeCoefficients::from_problem(problem, &geom.barycenter())?;
        let recovery = FluxRecovery::new(&geom, &coeff, opts).map_err(|err| with_element(err, e))?;
        let mut local = recovery.local_matrix(&geom);
        if coeff.gamma != 0.0 {
            local += local_mass_matrix(&geom, opts.order, opts.lumped_mass) * coeff.gamma;
        }
        scatter(&mut builder, space.local_dofs(e), &local);
    }
    add_outflow_term(&mut builder, mesh, &space, problem)?;
    let rhs = load_vector(mesh, &space, problem.source.as_ref())?;
    let (dirichlet, boundary_values) = dirichlet_data(mesh, &space, problem)?;
    Ok(RawSystem {
        matrix: builder.build(),
        rhs,
        dirichlet,
        boundary_values,
    })
}

pub fn assemble_high_order(
    mesh: &SimplicialMesh,
    problem: &SpaceTimeProblem,
    opts: &HighOrderOptions,
) -> Result<LinearSystem> {
    Ok(assemble_high_order_raw(mesh, problem, opts)?.eliminate_dirichlet())
}

fn with_element(err: Error, element: usize) -> Error {
    match err {
        Error::Unisolvence { condition, .. } => Error::Unisolvence { element, condition },
        Error::CoefficientOutOfRange { exponent, .. } => Error::CoefficientOutOfRange { element, exponent },
        other => other,
    }
}
