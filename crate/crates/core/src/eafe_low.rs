//! Lowest-order exponentially fitted (edge-averaged) assembly with the
//! closed-form Bernoulli kernel.

use nalgebra::DMatrix;

use crate::assembly::{
    add_outflow_term, check_inputs, dirichlet_data, load_vector, local_mass_matrix, scatter, LinearSystem, RawSystem,
};
use crate::error::{Error, Result};
use crate::fem::{compute_element_geometry, dot, local_diffusion_matrix, ElementGeometry, LagrangeSpace};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::SimplicialMesh;
use crate::problem::SpaceTimeProblem;

/// `B(s) = s / (eˢ − 1)`, with `B(0) = 1`.
///
/// Positive for every finite `s`; the negative branch uses
/// `B(s) = B(−s) − s`, which avoids overflow of `e^{−s}`.
pub fn bernoulli(s: f64) -> f64 {
    if s.abs() < 1e-8 {
        1.0 - 0.5 * s + s * s / 12.0
    } else if s > 500.0 {
        s * (-s).exp()
    } else if s > 0.0 {
        s / s.exp_m1()
    } else {
        bernoulli(-s) - s
    }
}

/// Element coefficients for the fitted schemes.
#[derive(Clone, Debug, PartialEq)]
pub struct EafeCoefficients {
    /// `D_ε`, symmetric positive definite.
    pub d: DMatrix<f64>,
    pub b: Vec<f64>,
    /// `D⁻¹ b`.
    pub q: Vec<f64>,
    pub gamma: f64,
}

impl EafeCoefficients {
    pub fn new(d: DMatrix<f64>, b: Vec<f64>, gamma: f64) -> Result<Self> {
        if d.nrows() != b.len() || !d.is_square() {
            return Err(Error::InvalidCoefficient("diffusion/convection dimension mismatch".into()));
        }
        let chol = nalgebra::Cholesky::new(d.clone())
            .ok_or_else(|| Error::InvalidCoefficient("diffusion matrix is not positive definite".into()))?;
        let q: Vec<f64> = chol.solve(&nalgebra::DVector::from_column_slice(&b)).iter().copied().collect();
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoefficient("q = D⁻¹b is not finite".into()));
        }
        Ok(Self { d, b, q, gamma })
    }

    /// Coefficients of `problem` frozen at `y`.
    pub fn from_problem(problem: &SpaceTimeProblem, y: &[f64]) -> Result<Self> {
        if !problem.is_steady() && !(problem.eps > 0.0) {
            return Err(Error::InvalidCoefficient(format!("eps must be positive, got {}", problem.eps)));
        }
        let c = problem.coefficients_at(y, problem.eps);
        Self::new(c.d, c.b, c.gamma)
    }
}

/// Local stiffness matrix `A_T`, row = test vertex `j`, column = trial `i`:
/// `A_ji = d_ji B(q·(y_i − y_j))` off the diagonal and
/// `A_jj = −Σ_{i≠j} d_ji B(q·(y_j − y_i))`.
pub fn local_eafe_matrix(geom: &ElementGeometry, coeff: &EafeCoefficients) -> DMatrix<f64> {
    let d = local_diffusion_matrix(geom, &coeff.d);
    let k = geom.dim() + 1;
    let y = &geom.vertex_coords;
    let exponent = |i: usize, j: usize| -> f64 {
        coeff.q.iter().enumerate().map(|(m, qm)| qm * (y[i][m] - y[j][m])).sum()
    };
    let mut a = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut diag = 0.0;
        for i in 0..k {
            if i == j {
                continue;
            }
            let s = exponent(i, j);
            a[(j, i)] = d[(j, i)] * bernoulli(s);
            diag -= d[(j, i)] * bernoulli(-s);
        }
        a[(j, j)] = diag;
    }
    a
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EafeOptions {
    /// Lump the `γ` mass term (keeps the M-matrix sign pattern).
    pub lumped_mass: bool,
}

pub fn assemble_eafe_raw(mesh: &SimplicialMesh, problem: &SpaceTimeProblem, opts: &EafeOptions) -> Result<RawSystem> {
    check_inputs(mesh, problem)?;
    let space = LagrangeSpace::new(mesh, 1)?;
    let n = space.num_dofs();
    let mut builder = TripletBuilder::with_capacity(n, n, mesh.num_simplices() * (mesh.dim() + 1).pow(2));
    for e in 0..mesh.num_simplices() {
        let geom = compute_element_geometry(mesh, e)?;
        let coeff = EafeCoefficients::from_problem(problem, &geom.barycenter())?;
        let mut local = local_eafe_matrix(&geom, &coeff);
        if coeff.gamma != 0.0 {
            local += local_mass_matrix(&geom, 1, opts.lumped_mass) * coeff.gamma;
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

pub fn assemble_eafe(mesh: &SimplicialMesh, problem: &SpaceTimeProblem, opts: &EafeOptions) -> Result<LinearSystem> {
    Ok(assemble_eafe_raw(mesh, problem, opts)?.eliminate_dirichlet())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MMatrixViolation {
    NonPositiveDiagonal { row: usize, value: f64 },
    PositiveOffDiagonal { row: usize, col: usize, value: f64 },
    NotDiagonallyDominant { row: usize, excess: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MMatrixReport {
    pub is_m_matrix: bool,
    pub violating_entries: Vec<MMatrixViolation>,
}

/// Sign pattern and weak row diagonal dominance, skipping `excluded` rows.
///
/// Off-diagonals may exceed zero by `1e-14 · max|row|`; dominance is
/// checked with slack `1e-12 · Σ|row|` to absorb cancellation in rows whose
/// exact sum is zero.
pub fn m_matrix_check(matrix: &CsrMatrix, excluded: Option<&[bool]>) -> MMatrixReport {
    let mut violations = Vec::new();
    for row in 0..matrix.nrows() {
        if excluded.is_some_and(|m| m[row]) {
            continue;
        }
        let (cols, vals) = matrix.row(row);
        let row_max = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let row_sum: f64 = vals.iter().map(|v| v.abs()).sum();
        let mut diag = 0.0;
        let mut off = 0.0;
        for (&col, &value) in cols.iter().zip(vals) {
            if col == row {
                diag = value;
            } else {
                off += value.abs();
                if value > 1e-14 * row_max {
                    violations.push(MMatrixViolation::PositiveOffDiagonal { row, col, value });
                }
            }
        }
        if !(diag > 0.0) {
            violations.push(MMatrixViolation::NonPositiveDiagonal { row, value: diag });
        }
        if off - diag > 1e-12 * row_sum {
            violations.push(MMatrixViolation::NotDiagonallyDominant { row, excess: off - diag });
        }
    }
    MMatrixReport {
        is_m_matrix: violations.is_empty(),
        violating_entries: violations,
    }
}

/// `∫_T b·∇λ_j`, used by the constant-exactness identity `A_T 1 = −(∫ b·∇λ_j)_j`.
pub fn convection_column(geom: &ElementGeometry, b: &[f64]) -> Vec<f64> {
    geom.lambda_grads.iter().map(|g| geom.volume * dot(b, g)).collect()
}
