use std::time::Instant;

use super::csr::{dot, norm2, CsrMatrix};
use super::precond::{GaussSeidel, Identity, Ilu0, Jacobi, Preconditioner, PreconditionerKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 50,
            max_iter: 5000,
            preconditioner: PreconditionerKind::Ilu0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    /// `‖b − Ax‖ / ‖b‖`, recomputed from the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    pub seconds: f64,
}

/// Restarted, right-preconditioned GMRES with `x₀ = 0`.
///
/// Breakdown or exhausting `max_iter` yields `converged = false`; only a
/// failed preconditioner setup is an `Err`.
pub fn solve_gmres(a: &CsrMatrix, b: &[f64], opts: &GmresOptions) -> Result<(Vec<f64>, SolverReport)> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(Error::InvalidInput(format!(
            "GMRES: matrix {}x{} with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let start = Instant::now();
    let (x, iterations) = match opts.preconditioner {
        PreconditionerKind::None => gmres_core(a, b, opts, &Identity),
        PreconditionerKind::Jacobi => gmres_core(a, b, opts, &Jacobi::new(a)?),
        PreconditionerKind::Ilu0 => gmres_core(a, b, opts, &Ilu0::new(a)?),
        PreconditionerKind::GaussSeidel => gmres_core(a, b, opts, &GaussSeidel::new(a)?),
    };
    let relative_residual = relative_residual(a, &x, b);
    Ok((
        x,
        SolverReport {
            iterations,
            relative_residual,
            converged: relative_residual <= opts.tol,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let bnorm = norm2(b);
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
    if bnorm == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bnorm
    }
}

fn gmres_core(a: &CsrMatrix, b: &[f64], opts: &GmresOptions, m: &dyn Preconditioner) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (x, 0);
    }
    let restart = opts.restart.max(1).min(n.max(1));
    let mut total = 0usize;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];

    while total < opts.max_iter {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
        let beta = norm2(&r);
        if beta / bnorm <= opts.tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..restart {
            if total >= opts.max_iter {
                break;
            }
            total += 1;
            m.apply(&basis[k], &mut z);
            a.matvec(&z, &mut w);
            // Modified Gram–Schmidt.
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let hnext = norm2(&w);
            h[k + 1][k] = hnext;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if (g[k + 1].abs() / bnorm) <= opts.tol * 0.5 || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        if k_used == 0 {
            break;
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yj, vj) in y.iter().zip(&basis) {
            for (u, v) in update.iter_mut().zip(vj) {
                *u += yj * v;
            }
        }
        m.apply(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
    (x, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, h: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 / h));
            if i > 0 {
                t.push((i, i - 1, -1.0 / h));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0 / h));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    // Thomas algorithm oracle for tridiagonal systems.
    fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let (mut c, mut d) = (vec![0.0; n], vec![0.0; n]);
        c[0] = sup[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - sub[i] * c[i - 1];
            c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
            d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(7);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let (x, rep) = solve_gmres(&a, &b, &GmresOptions { preconditioner: PreconditionerKind::None, ..Default::default() }).unwrap();
        assert!(rep.converged && rep.iterations <= 1);
        assert_eq!(x, b);
    }

    #[test]
    fn laplacian_matches_thomas_for_every_preconditioner() {
        let h = 1.0 / 32.0;
        let n = 31;
        let a = laplacian_1d(n, h);
        let b: Vec<f64> = (1..=n).map(|i| h * (std::f64::consts::PI * i as f64 * h).sin()).collect();
        let sub = vec![-1.0 / h; n];
        let sup = vec![-1.0 / h; n];
        let diag = vec![2.0 / h; n];
        let exact = thomas(&sub, &diag, &sup, &b);
        for p in [
            PreconditionerKind::None,
            PreconditionerKind::Jacobi,
            PreconditionerKind::Ilu0,
            PreconditionerKind::GaussSeidel,
        ] {
            let opts = GmresOptions { preconditioner: p, ..Default::default() };
            let (x, rep) = solve_gmres(&a, &b, &opts).unwrap();
            assert!(rep.converged, "{p:?}: {rep:?}");
            assert!(rep.relative_residual <= opts.tol);
            let err = x.iter().zip(&exact).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-8, "{p:?}: {err:e}");
        }
    }

    #[test]
    fn max_iter_exhaustion_is_reported_not_raised() {
        let a = laplacian_1d(200, 1.0);
        let b = vec![1.0; 200];
        let opts = GmresOptions { max_iter: 3, restart: 3, preconditioner: PreconditionerKind::None, ..Default::default() };
        let (_, rep) = solve_gmres(&a, &b, &opts).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }
}
