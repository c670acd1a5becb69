//! Sparse storage, iterative and direct solvers.

mod csr;
mod dense;
mod gmres;
mod mm;
mod precond;

use nalgebra::DMatrix;

pub use csr::{dot, norm2, CsrMatrix, TripletBuilder};
pub use dense::{solve_dense_lu, DenseLu, DENSE_FALLBACK_LIMIT, PIVOT_TOL};
pub use gmres::{relative_residual, solve_gmres, GmresOptions, SolverReport};
pub use mm::{from_matrix_market, read_matrix_market, to_matrix_market, write_matrix_market};
pub use precond::{GaussSeidel, Identity, Ilu0, Jacobi, Preconditioner, PreconditionerKind};

use crate::error::Result;

/// Which solver [`solve`] should use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Dense LU below [`DENSE_FALLBACK_LIMIT`] unknowns, GMRES above.
    #[default]
    Auto,
    Direct,
    Gmres,
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub kind: SolverKind,
    pub gmres: GmresOptions,
}

/// Solve `A x = b` with the configured strategy.
///
/// A singular matrix on the direct path is an `Err`; a non-converged
/// iterative solve comes back as `Ok` with `converged = false`.
pub fn solve(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolverReport)> {
    let direct = match opts.kind {
        SolverKind::Auto => a.nrows() < DENSE_FALLBACK_LIMIT,
        SolverKind::Direct => true,
        SolverKind::Gmres => false,
    };
    if !direct {
        return solve_gmres(a, b, &opts.gmres);
    }
    let start = std::time::Instant::now();
    let dense = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a.get(i, j));
    let x = solve_dense_lu(&dense, b)?;
    let relative_residual = relative_residual(a, &x, b);
    Ok((
        x,
        SolverReport {
            iterations: 0,
            relative_residual,
            converged: relative_residual <= opts.gmres.tol,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}
