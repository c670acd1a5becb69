use std::collections::HashMap;

use super::SimplicialMesh;
use crate::error::Result;

/// Red refinement: every edge is bisected; intervals split in 2, triangles
/// in 4, tetrahedra in 8. Boundary roles are recomputed for the new mesh.
///
/// The inner octahedron of a tetrahedron is cut along its shortest diagonal.
/// Ties are broken away from the midpoint of the parent's longest edge
/// (lowest local index among equals), which keeps Kuhn tetrahedra Kuhn and
/// makes `h` halve exactly under repeated refinement.
pub fn uniform_refine(mesh: &SimplicialMesh) -> Result<SimplicialMesh> {
    let dim = mesh.dim();
    let mut coords: Vec<f64> = mesh.vertices().flatten().copied().collect();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, coords: &mut Vec<f64>| -> usize {
        let key = if a < b { (a, b) } else { (b, a) };
        *midpoints.entry(key).or_insert_with(|| {
            let id = coords.len() / dim;
            for k in 0..dim {
                let m = 0.5 * (coords[a * dim + k] + coords[b * dim + k]);
                coords.push(m);
            }
            id
        })
    };

    let factor = 1 << dim;
    let mut simplices = Vec::with_capacity(mesh.num_simplices() * factor * (dim + 1));
    for e in 0..mesh.num_simplices() {
        let s = mesh.simplex(e).to_vec();
        match dim {
            1 => {
                let m = midpoint(s[0], s[1], &mut coords);
                simplices.extend_from_slice(&[s[0], m, m, s[1]]);
            }
            2 => {
                let m01 = midpoint(s[0], s[1], &mut coords);
                let m12 = midpoint(s[1], s[2], &mut coords);
                let m02 = midpoint(s[0], s[2], &mut coords);
                simplices.extend_from_slice(&[s[0], m01, m02]);
                simplices.extend_from_slice(&[m01, s[1], m12]);
                simplices.extend_from_slice(&[m02, m12, s[2]]);
                simplices.extend_from_slice(&[m01, m12, m02]);
            }
            3 => {
                let mut m = [[usize::MAX; 4]; 4];
                for a in 0..4 {
                    for b in a + 1..4 {
                        let id = midpoint(s[a], s[b], &mut coords);
                        m[a][b] = id;
                        m[b][a] = id;
                    }
                }
                for a in 0..4 {
                    let mut child = [s[a]; 4];
                    for b in 0..4 {
                        if b != a {
                            child[b] = m[a][b];
                        }
                    }
                    simplices.extend_from_slice(&child);
                }
                let [a, b, c, d] = octahedron_diagonal(mesh, &s);
                // Equator around diagonal (m_ab, m_cd), in cyclic order.
                let ring = [m[a][c], m[a][d], m[b][d], m[b][c]];
                for i in 0..4 {
                    simplices.extend_from_slice(&[m[a][b], m[c][d], ring[i], ring[(i + 1) % 4]]);
                }
            }
            _ => unreachable!("mesh dimension is 1..=3"),
        }
    }
    SimplicialMesh::from_parts(dim, coords, simplices, mesh.t_max())
}

/// Choose the octahedron diagonal as a split `[a, b, c, d]` of the local
/// vertices: the diagonal joins the midpoints of edges `ab` and `cd`.
fn octahedron_diagonal(mesh: &SimplicialMesh, s: &[usize]) -> [usize; 4] {
    let p = |i: usize| mesh.vertex(s[i]);
    let dist2 = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>();
    let mid = |i: usize, j: usize| -> Vec<f64> { p(i).iter().zip(p(j)).map(|(u, v)| 0.5 * (u + v)).collect() };

    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let longest = pairs
        .iter()
        .copied()
        .fold(((0, 1), -1.0), |best, (i, j)| {
            let l = dist2(p(i), p(j));
            if l > best.1 * (1.0 + 1e-12) {
                ((i, j), l)
            } else {
                best
            }
        })
        .0;
    let splits = [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]];
    let lengths: Vec<f64> = splits
        .iter()
        .map(|&[a, b, c, d]| dist2(&mid(a, b), &mid(c, d)))
        .collect();
    let shortest = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let candidates: Vec<[usize; 4]> = splits
        .iter()
        .zip(&lengths)
        .filter(|(_, &l)| l <= shortest * (1.0 + 1e-12))
        .map(|(s, _)| *s)
        .collect();
    let touches_longest = |sp: &[usize; 4]| {
        let e = longest;
        (sp[0], sp[1]) == e || (sp[2], sp[3]) == e
    };
    candidates
        .iter()
        .find(|sp| !touches_longest(sp))
        .copied()
        .unwrap_or(candidates[0])
}
