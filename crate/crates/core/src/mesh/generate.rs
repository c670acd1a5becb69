use super::SimplicialMesh;
use crate::error::{Error, Result};

/// Kuhn (Freudenthal) triangulation of the box `[lower, upper]` with
/// `divisions[k]` cells along axis `k`. Boundary facets are left unclassified.
///
/// Vertices are numbered lexicographically with the first axis fastest;
/// simplices are ordered by cell, then by axis permutation.
pub fn build_box_mesh(lower: &[f64], upper: &[f64], divisions: &[usize]) -> Result<SimplicialMesh> {
    let dim = divisions.len();
    if lower.len() != dim || upper.len() != dim {
        return Err(Error::InvalidInput("box bounds and divisions differ in dimension".into()));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!("box dimension {dim} not in 1..=3")));
    }
    if let Some(k) = divisions.iter().position(|&d| d == 0) {
        return Err(Error::InvalidInput(format!("zero divisions along axis {k}")));
    }
    for k in 0..dim {
        if !(upper[k] > lower[k]) || !lower[k].is_finite() || !upper[k].is_finite() {
            return Err(Error::InvalidInput(format!(
                "degenerate extent along axis {k}: [{}, {}]",
                lower[k], upper[k]
            )));
        }
    }

    let npts: Vec<usize> = divisions.iter().map(|d| d + 1).collect();
    let nv: usize = npts.iter().product();
    let mut coords = Vec::with_capacity(nv * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..nv {
        for k in 0..dim {
            // Endpoints hit exactly; interior nodes by linear interpolation.
            let x = if idx[k] == divisions[k] {
                upper[k]
            } else {
                lower[k] + (upper[k] - lower[k]) * idx[k] as f64 / divisions[k] as f64
            };
            coords.push(x);
        }
        advance(&mut idx, &npts);
    }

    let vertex_id = |i: &[usize]| -> usize {
        let mut id = 0;
        for k in (0..dim).rev() {
            id = id * npts[k] + i[k];
        }
        id
    };

    let perms = permutations(dim);
    let ncells: usize = divisions.iter().product();
    let mut simplices = Vec::with_capacity(ncells * perms.len() * (dim + 1));
    let mut cell = vec![0usize; dim];
    for _ in 0..ncells {
        for perm in &perms {
            let mut corner = cell.clone();
            simplices.push(vertex_id(&corner));
            for &axis in perm {
                corner[axis] += 1;
                simplices.push(vertex_id(&corner));
            }
        }
        advance(&mut cell, divisions);
    }
    SimplicialMesh::new(dim, coords, simplices)
}

/// Space-time box `Ω_s × (0, t_max)` with classified boundary; the last entry
/// of `divisions` counts time slabs.
pub fn space_time_box(
    space_lower: &[f64],
    space_upper: &[f64],
    t_max: f64,
    divisions: &[usize],
) -> Result<SimplicialMesh> {
    let mut lower = space_lower.to_vec();
    let mut upper = space_upper.to_vec();
    lower.push(0.0);
    upper.push(t_max);
    build_box_mesh(&lower, &upper, divisions)?.classify_boundary(t_max)
}

/// Steady box mesh with every boundary facet Dirichlet.
pub fn steady_box(lower: &[f64], upper: &[f64], divisions: &[usize]) -> Result<SimplicialMesh> {
    Ok(build_box_mesh(lower, upper, divisions)?.classify_all_dirichlet())
}

fn advance(idx: &mut [usize], extent: &[usize]) {
    for k in 0..idx.len() {
        idx[k] += 1;
        if idx[k] < extent[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for k in 0..n {
            if !prefix.contains(&k) {
                prefix.push(k);
                rec(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, &mut out);
    out
}

/// Random perturbation of a box mesh. Every coordinate strictly inside the
/// bounding box moves by a uniform offset in `±amplitude · h`, `h` the
/// shortest edge, so boundary vertices slide within their faces and the
/// domain is unchanged. Fails if an element would invert.
pub fn perturb_vertices(mesh: &SimplicialMesh, amplitude: f64, seed: u64) -> Result<SimplicialMesh> {
    use rand::{Rng, SeedableRng};

    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::InvalidInput(format!("perturbation amplitude {amplitude} not in [0, 0.5)")));
    }
    let dim = mesh.dim();
    let k = dim + 1;
    let mut h = f64::INFINITY;
    for s in mesh.simplices() {
        for a in 0..k {
            for b in a + 1..k {
                let (p, q) = (mesh.vertex(s[a]), mesh.vertex(s[b]));
                h = h.min(p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt());
            }
        }
    }
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in mesh.vertices() {
        for i in 0..dim {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut coords: Vec<f64> = mesh.vertices().flatten().copied().collect();
    for p in coords.chunks_mut(dim) {
        for (i, c) in p.iter_mut().enumerate() {
            let tol = 1e-12 * (hi[i] - lo[i]);
            if *c > lo[i] + tol && *c < hi[i] - tol && amplitude > 0.0 {
                *c += h * rng.gen_range(-amplitude..amplitude);
            }
        }
    }
    let simplices: Vec<usize> = mesh.simplices().flatten().copied().collect();
    for (e, s) in simplices.chunks(k).enumerate() {
        let before = super::signed_det(dim, &mesh.coords, s);
        let after = super::signed_det(dim, &coords, s);
        if before.signum() != after.signum() {
            return Err(Error::DegenerateElement { element: e, det: after });
        }
    }
    let out = SimplicialMesh::new(dim, coords, simplices)?;
    Ok(match (mesh.t_max(), mesh.is_classified()) {
        (Some(t), _) => out.classify_boundary(t)?,
        (None, true) => out.classify_all_dirichlet(),
        (None, false) => out,
    })
}
