use super::geometry::{compute_element_geometry, dot};
use super::lagrange::{shape_gradients, shape_values, LagrangeSpace};
use super::quadrature::QuadratureRule;
use crate::error::Result;
use crate::mesh::SimplicialMesh;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    /// Seminorm of the full (space-time) gradient error.
    pub h1_semi: f64,
}

/// `‖u − u_h‖_{L²}` and `|u − u_h|_{H¹}` by element quadrature.
///
/// `extra_degree` is added to the default rule degree `2r + 2`.
pub fn error_norms(
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    u_h: &[f64],
    exact: impl Fn(&[f64]) -> f64,
    exact_grad: impl Fn(&[f64]) -> Vec<f64>,
    extra_degree: usize,
) -> Result<ErrorNorms> {
    let order = space.order();
    let rule = QuadratureRule::simplex(mesh.dim(), 2 * order + 2 + extra_degree);
    let (mut l2, mut h1) = (0.0, 0.0);
    for e in 0..mesh.num_simplices() {
        let geom = compute_element_geometry(mesh, e)?;
        let dofs = space.local_dofs(e);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let x = geom.map_point(lam);
            let phi = shape_values(order, lam);
            let dphi = shape_gradients(order, lam, &geom);
            let uh: f64 = dofs.iter().zip(&phi).map(|(&d, p)| u_h[d] * p).sum();
            let mut guh = vec![0.0; mesh.dim()];
            for (&d, g) in dofs.iter().zip(&dphi) {
                for k in 0..guh.len() {
                    guh[k] += u_h[d] * g[k];
                }
            }
            let ge = exact_grad(&x);
            let diff: Vec<f64> = ge.iter().zip(&guh).map(|(a, b)| a - b).collect();
            l2 += w * geom.volume * (exact(&x) - uh).powi(2);
            h1 += w * geom.volume * dot(&diff, &diff);
        }
    }
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
    })
}

/// `|v_h|_{H¹}` for a discrete function (exact for the given order).
pub fn h1_seminorm(mesh: &SimplicialMesh, space: &LagrangeSpace, v: &[f64]) -> Result<f64> {
    let zero = vec![0.0; mesh.dim()];
    Ok(error_norms(mesh, space, v, |_| 0.0, |_| zero.clone(), 0)?.h1_semi)
}
