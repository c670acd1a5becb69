//! Element geometry, quadrature, Lagrange spaces and error norms.

mod geometry;
mod lagrange;
mod norms;
mod quadrature;

pub use geometry::{compute_element_geometry, dot, local_diffusion_matrix, Edge, ElementGeometry};
pub use lagrange::{
    local_dof_count, local_edges, local_nodes, shape_gradients, shape_hessians, shape_values, LagrangeSpace,
};
pub use norms::{error_norms, h1_seminorm, ErrorNorms};
pub use quadrature::{barycentric_monomial_mean, gauss_legendre, QuadratureRule};
