#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use spacetime_fem::fem::ElementGeometry;

/// Simplex with vertices uniform in `[-1, 1]ⁿ`, rejecting near-flat draws.
pub fn random_simplex(rng: &mut impl Rng, n: usize) -> ElementGeometry {
    loop {
        let pts: Vec<Vec<f64>> = (0..=n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        if let Ok(g) = ElementGeometry::from_vertices(&refs) {
            if g.volume > 0.02 {
                return g;
            }
        }
    }
}

/// `M Mᵀ + 0.1 I` with `M` uniform in `[-1, 1]`.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n) * 0.1
}

/// Random direction scaled so that `|q| diam = qh`.
pub fn random_q(rng: &mut impl Rng, n: usize, qh: f64, diameter: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    dir.iter().map(|v| v / norm * qh / diameter).collect()
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
