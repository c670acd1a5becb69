//! Dense LU with partial pivoting and a Hager–Higham one-norm condition
//! estimate. Used for small element systems and as the direct fallback for
//! global systems below [`DENSE_FALLBACK_LIMIT`] unknowns.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest system routed to the dense solver by the automatic solver choice.
pub const DENSE_FALLBACK_LIMIT: usize = 2000;

/// Relative pivot threshold: pivots below `PIVOT_TOL * ‖A‖₁` are singular.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    // Row-major packed L (unit lower, below diagonal) and U.
    lu: Vec<f64>,
    perm: Vec<usize>,
    norm1: f64,
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl DenseLu {
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput(format!(
                "dense LU needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let norm1 = one_norm(a);
        let threshold = PIVOT_TOL * norm1;
        let mut lu = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                lu[i * n + j] = a[(i, j)];
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= threshold || !pmax.is_finite() {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: pmax,
                    threshold,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / pivot;
                lu[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= l * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // PA = LU  =>  Aᵀ = Uᵀ Lᵀ P
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, b.ncols());
        for c in 0..b.ncols() {
            let col: Vec<f64> = b.column(c).iter().copied().collect();
            out.set_column(c, &DVector::from_vec(self.solve(&col)));
        }
        out
    }

    /// Estimate of `‖A‖₁ ‖A⁻¹‖₁` (Hager's method with Higham's safeguard).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            let new_est: f64 = y.iter().map(|v| v.abs()).sum();
            let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, -1.0), |b, (j, v)| if v.abs() > b.1 { (j, v.abs()) } else { b });
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if new_est <= est || zmax <= zx {
                est = est.max(new_est);
                break;
            }
            est = new_est;
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        // Higham's alternating-sign test vector guards against bad estimates.
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let y = self.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        self.norm1 * est.max(alt_est)
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve_dense_lu(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    Ok(DenseLu::factor(a)?.solve(b))
}
