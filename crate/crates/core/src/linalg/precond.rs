use super::csr::CsrMatrix;
use crate::error::{Error, Result};

/// Preconditioner selection for [`super::solve_gmres`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    None,
    Jacobi,
    #[default]
    Ilu0,
    GaussSeidel,
}

pub trait Preconditioner {
    /// `z ≈ A⁻¹ r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                if d == 0.0 {
                    Err(Error::SolverFailure(format!("zero diagonal in row {i}")))
                } else {
                    Ok(1.0 / d)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { inv_diag })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// One forward Gauss–Seidel sweep from zero: `z = (D + L)⁻¹ r`.
pub struct GaussSeidel<'a> {
    a: &'a CsrMatrix,
    diag: Vec<f64>,
}

impl<'a> GaussSeidel<'a> {
    pub fn new(a: &'a CsrMatrix) -> Result<Self> {
        let diag = a.diagonal();
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(Error::SolverFailure(format!("zero diagonal in row {i}")));
        }
        Ok(Self { a, diag })
    }
}

impl Preconditioner for GaussSeidel<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for i in 0..r.len() {
            let (cols, vals) = self.a.row(i);
            let mut s = r[i];
            for (&j, &v) in cols.iter().zip(vals) {
                if j >= i {
                    break;
                }
                s -= v * z[j];
            }
            z[i] = s / self.diag[i];
        }
    }
}

/// ILU(0): incomplete LU restricted to the sparsity pattern of `A`.
pub struct Ilu0 {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    lu: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let row_offsets = a.row_offsets().to_vec();
        let col_indices = a.col_indices().to_vec();
        let mut lu = a.values().to_vec();
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_offsets[i]..row_offsets[i + 1] {
                if col_indices[k] == i {
                    diag_pos[i] = k;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(Error::SolverFailure(format!("ILU(0): missing diagonal in row {i}")));
            }
        }
        // IKJ variant with a dense column-position work array.
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_offsets[i], row_offsets[i + 1]);
            for k in start..end {
                pos[col_indices[k]] = k;
            }
            for kk in start..end {
                let k = col_indices[kk];
                if k >= i {
                    break;
                }
                let pivot = lu[diag_pos[k]];
                if pivot == 0.0 {
                    return Err(Error::SolverFailure(format!("ILU(0): zero pivot in row {k}")));
                }
                let l = lu[kk] / pivot;
                lu[kk] = l;
                for jj in diag_pos[k] + 1..row_offsets[k + 1] {
                    let p = pos[col_indices[jj]];
                    if p != usize::MAX {
                        lu[p] -= l * lu[jj];
                    }
                }
            }
            for k in start..end {
                pos[col_indices[k]] = usize::MAX;
            }
            if lu[diag_pos[i]] == 0.0 {
                return Err(Error::SolverFailure(format!("ILU(0): zero pivot in row {i}")));
            }
        }
        Ok(Self {
            row_offsets,
            col_indices,
            lu,
            diag_pos,
        })
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let mut s = r[i];
            for k in self.row_offsets[i]..self.diag_pos[i] {
                s -= self.lu[k] * z[self.col_indices[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..self.row_offsets[i + 1] {
                s -= self.lu[k] * z[self.col_indices[k]];
            }
            z[i] = s / self.lu[self.diag_pos[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ilu0_is_exact_on_tridiagonal() {
        // No fill-in for a tridiagonal matrix, so ILU(0) = LU.
        let n = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -2.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let ilu = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let b = a.mul_vec(&x);
        let mut z = vec![0.0; n];
        ilu.apply(&b, &mut z);
        for (u, v) in z.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_seidel_solves_lower_triangular_exactly() {
        let a = CsrMatrix::from_dense(&[
            vec![2.0, 0.0, 0.0],
            vec![1.0, 4.0, 0.0],
            vec![0.0, -1.0, 1.0],
        ]);
        let gs = GaussSeidel::new(&a).unwrap();
        let mut z = vec![0.0; 3];
        gs.apply(&[2.0, 5.0, 0.0], &mut z);
        assert_eq!(z, vec![1.0, 1.0, 1.0]);
    }
}
