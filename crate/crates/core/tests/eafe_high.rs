mod common;

use common::{mat_vec, random_q, random_simplex, random_spd, rel_frobenius};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use spacetime_fem::eafe_high::*;
use spacetime_fem::eafe_low::{local_eafe_matrix, EafeCoefficients};
use spacetime_fem::fem::{local_diffusion_matrix, ElementGeometry, QuadratureRule};
use spacetime_fem::linalg::{solve, SolverOptions};
use spacetime_fem::problem::steady_manufactured_2d;
use spacetime_fem::Error;

fn geometry(pts: &[&[f64]]) -> ElementGeometry {
    ElementGeometry::from_vertices(pts).unwrap()
}

fn constant_field(n: usize, v: &[f64]) -> VecPoly {
    (0..n).map(|k| Poly::constant(n, v[k])).collect()
}

/// Physical affine field `a + B x` written in the reference coordinates of `geom`.
fn affine_field(geom: &ElementGeometry, a: &[f64], b: &DMatrix<f64>) -> VecPoly {
    let n = geom.dim();
    let x0 = &geom.vertex_coords[0];
    (0..n)
        .map(|i| {
            let c = a[i] + (0..n).map(|k| b[(i, k)] * x0[k]).sum::<f64>();
            let slope: Vec<f64> = (1..=n)
                .map(|m| (0..n).map(|k| b[(i, k)] * (geom.vertex_coords[m][k] - x0[k])).sum())
                .collect();
            Poly::affine(c, &slope)
        })
        .collect()
}

fn coefficients(d: DMatrix<f64>, q: &[f64]) -> EafeCoefficients {
    let b = mat_vec(&d, q);
    EafeCoefficients::new(d, b, 0.0).unwrap()
}

#[test]
fn space_dimensions() {
    let tri = geometry(&[&[0.0, 0.0], &[1.0, 0.2], &[0.3, 0.9]]);
    let tet = geometry(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.1], &[0.0, 1.0, 0.0], &[0.2, 0.1, 1.0]]);
    for (geom, order, m, m0) in [(&tri, 1, 3, 2), (&tet, 1, 6, 3), (&tri, 2, 8, 6)] {
        let space = NedelecSpace::build(geom, order).unwrap();
        assert_eq!((space.m(), space.m0()), (m, m0));
    }
}

#[test]
fn unsupported_orders_are_rejected() {
    let tet = geometry(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
    let tri = geometry(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
    assert!(matches!(NedelecSpace::build(&tet, 2), Err(Error::Unsupported(_))));
    assert!(matches!(NedelecSpace::build(&tri, 3), Err(Error::Unsupported(_))));
}

#[test]
fn duality_and_reconstruction_on_random_elements() {
    let mut rng = StdRng::seed_from_u64(11);
    for (n, order) in [(2, 1), (3, 1), (2, 2)] {
        for _ in 0..50 {
            let geom = random_simplex(&mut rng, n);
            let space = NedelecSpace::build(&geom, order).unwrap();
            assert!(space.duality_error() <= 1e-11, "duality {:e}", space.duality_error());
            let fr = FluxRecovery::new(&geom, &coefficients(DMatrix::identity(n, n), &vec![0.0; n]), &HighOrderOptions::new(order))
                .unwrap();
            assert!(space.reconstruction_residual(&fr.p) <= 1e-10);
        }
    }
}

#[test]
fn p_has_full_column_rank() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..100 {
        let geom = random_simplex(&mut rng, 2);
        for order in [1, 2] {
            let fr = FluxRecovery::new(&geom, &coefficients(DMatrix::identity(2, 2), &[0.0, 0.0]), &HighOrderOptions::new(order))
                .unwrap();
            let sv = fr.p.clone().svd(false, false).singular_values;
            let (max, min) = (sv.max(), sv.min());
            assert!(min > 1e-8 * max, "order {order}: singular values {sv}");
        }
    }
}

#[test]
fn edge_dof_of_constant_field() {
    let geom = geometry(&[&[0.1, -0.2], &[1.3, 0.1], &[0.4, 0.8]]);
    let space = NedelecSpace::build(&geom, 1).unwrap();
    let v = [0.7, -1.9];
    let field = constant_field(2, &v);
    for (j, dof) in space.dofs.iter().enumerate() {
        let DofKind::Edge { a, b, .. } = dof.kind else { unreachable!() };
        let (pa, pb) = (&geom.vertex_coords[a], &geom.vertex_coords[b]);
        // |e| v·τ = v·(b − a).
        let expect = v[0] * (pb[0] - pa[0]) + v[1] * (pb[1] - pa[1]);
        let got = space.apply(j, &field, &ExpWeight::zero(2));
        assert!((got - expect).abs() < 1e-14, "{got} vs {expect}");
    }
}

#[test]
fn edge_dofs_of_barycentric_gradients_are_endpoint_differences() {
    let geom = geometry(&[&[0.0, 0.0, 0.0], &[1.0, 0.2, 0.1], &[0.1, 0.9, 0.0], &[0.3, 0.2, 1.1]]);
    let space = NedelecSpace::build(&geom, 1).unwrap();
    for m in 0..4 {
        let field = constant_field(3, &geom.lambda_grads[m]);
        for (j, dof) in space.dofs.iter().enumerate() {
            let DofKind::Edge { a, b, .. } = dof.kind else { unreachable!() };
            let expect = (m == b) as i32 as f64 - (m == a) as i32 as f64;
            assert!((space.apply(j, &field, &ExpWeight::zero(3)) - expect).abs() < 1e-14);
        }
    }
}

#[test]
fn cartesian_embedding_entries_for_order_one() {
    // p_ek = |e| (τ_e)_k for the Cartesian unit fields.
    let geom = geometry(&[&[0.2, 0.1], &[1.0, 0.3], &[0.5, 1.2]]);
    let space = NedelecSpace::build(&geom, 1).unwrap();
    for k in 0..2 {
        let mut unit = [0.0; 2];
        unit[k] = 1.0;
        let field = constant_field(2, &unit);
        for (j, dof) in space.dofs.iter().enumerate() {
            let DofKind::Edge { a, b, .. } = dof.kind else { unreachable!() };
            let tangent = geom.vertex_coords[b][k] - geom.vertex_coords[a][k];
            assert!((space.apply(j, &field, &ExpWeight::zero(2)) - tangent).abs() < 1e-14);
        }
    }
}

#[test]
fn interior_dof_matches_physical_quadrature() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..20 {
        let geom = random_simplex(&mut rng, 2);
        let space = NedelecSpace::build(&geom, 2).unwrap();
        let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bm = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
        let field = affine_field(&geom, &a, &bm);
        let rule = QuadratureRule::simplex(2, 6);
        for (j, dof) in space.dofs.iter().enumerate() {
            let DofKind::Interior { component } = dof.kind else { continue };
            let tau: Vec<f64> = (0..2)
                .map(|k| geom.vertex_coords[component + 1][k] - geom.vertex_coords[0][k])
                .collect();
            let mean: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(lam, w)| {
                    let x = geom.map_point(lam);
                    let v: Vec<f64> = (0..2).map(|i| a[i] + bm[(i, 0)] * x[0] + bm[(i, 1)] * x[1]).collect();
                    w * (v[0] * tau[0] + v[1] * tau[1])
                })
                .sum();
            let got = space.apply(j, &field, &ExpWeight::zero(2));
            assert!((got - mean).abs() <= 1e-11 * mean.abs().max(1.0), "{got} vs {mean}");
        }
    }
}

#[test]
fn weighted_matrix_is_identity_without_convection() {
    let geom = geometry(&[&[0.0, 0.0], &[1.0, 0.1], &[0.2, 0.7]]);
    for order in [1, 2] {
        let fr = FluxRecovery::new(&geom, &coefficients(DMatrix::identity(2, 2), &[0.0, 0.0]), &HighOrderOptions::new(order))
            .unwrap();
        let m = fr.space.m();
        assert!((&fr.z_scaled - DMatrix::<f64>::identity(m, m)).amax() < 1e-12);
    }
}

#[test]
fn heat_edge_entries_match_closed_form() {
    // Space-time triangle in (x, t) with D = diag(1, ε) and b = (0, 1):
    // q = (0, 1/ε), the weight is e^{−(t − t_c)/ε}.
    let eps = 0.05;
    let geom = geometry(&[&[0.0, 0.0], &[0.25, 0.0], &[0.0, 0.25]]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, eps]));
    let coeff = EafeCoefficients::new(d, vec![0.0, 1.0], 0.0).unwrap();
    let fr = FluxRecovery::new(&geom, &coeff, &HighOrderOptions::new(1)).unwrap();
    let tc = geom.barycenter()[1];
    for (j, dof) in fr.space.dofs.iter().enumerate() {
        let DofKind::Edge { a, b, .. } = dof.kind else { unreachable!() };
        let (pa, pb) = (&geom.vertex_coords[a], &geom.vertex_coords[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let tangent = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
        let (ti, tj) = (pa[1] - tc, pb[1] - tc);
        let integral = if (tj - ti).abs() < 1e-15 {
            len * (-ti / eps).exp()
        } else {
            len * eps * ((-ti / eps).exp() - (-tj / eps).exp()) / (tj - ti)
        };
        let got = fr.space.apply_shifted(j, &constant_field(2, &tangent), fr.weight(), fr.shifts[j]);
        let expect = integral * (-fr.shifts[j]).exp();
        assert!((got - expect).abs() <= 1e-10 * expect.abs(), "edge {a}-{b}: {got} vs {expect}");
    }
}

#[test]
fn psi_dofs_recover_unit_coefficients_without_convection() {
    let geom = geometry(&[&[0.0, 0.0], &[0.8, 0.3], &[0.1, 1.0]]);
    for order in [1, 2] {
        let fr = FluxRecovery::new(&geom, &coefficients(DMatrix::identity(2, 2), &[0.0, 0.0]), &HighOrderOptions::new(order))
            .unwrap();
        for k in 0..fr.space.m0() {
            let d: Vec<f64> = fr.p.column(k).iter().copied().collect();
            let c = fr.recover(&d);
            for (i, v) in c.iter().enumerate() {
                assert!((v - if i == k { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn endpoint_formula_for_order_one_d() {
    let geom = geometry(&[&[0.0, 0.0], &[0.6, 0.1], &[0.2, 0.5]]);
    let q = [3.0, -2.0];
    let fr = FluxRecovery::new(&geom, &coefficients(DMatrix::identity(2, 2), &q), &HighOrderOptions::new(1)).unwrap();
    let c = geom.barycenter();
    let scaled = |i: usize, j: usize| -> f64 {
        let x = &geom.vertex_coords[i];
        (-(q[0] * (x[0] - c[0]) + q[1] * (x[1] - c[1])) - fr.shifts[j]).exp()
    };
    let u = [0.3, -1.2, 2.0];
    let d = fr.compute_d(&u);
    let d_const = fr.compute_d(&[1.7; 3]);
    for (j, dof) in fr.space.dofs.iter().enumerate() {
        let DofKind::Edge { a, b, .. } = dof.kind else { unreachable!() };
        let expect = scaled(b, j) * u[b] - scaled(a, j) * u[a];
        assert!((d[j] - expect).abs() < 1e-13, "{} vs {expect}", d[j]);
        let expect_const = 1.7 * (scaled(b, j) - scaled(a, j));
        assert!((d_const[j] - expect_const).abs() < 1e-13);
    }
}

#[test]
fn d_without_convection_is_gradient_dofs() {
    let geom = geometry(&[&[0.0, 0.0], &[1.0, 0.0], &[0.3, 0.8]]);
    let fr = FluxRecovery::new(&geom, &coefficients(DMatrix::identity(2, 2), &[0.0, 0.0]), &HighOrderOptions::new(2)).unwrap();
    // u = 1 + 2x − y is reproduced by P2 nodal values; ∇u = (2, −1).
    let nodes = spacetime_fem::fem::local_nodes(2, 2);
    let u: Vec<f64> = nodes
        .iter()
        .map(|lam| {
            let x = geom.map_point(lam);
            1.0 + 2.0 * x[0] - x[1]
        })
        .collect();
    let d = fr.compute_d(&u);
    for j in 0..fr.space.m() {
        let expect = fr.space.apply(j, &constant_field(2, &[2.0, -1.0]), &ExpWeight::zero(2));
        assert!((d[j] - expect).abs() < 1e-12);
    }
}

#[test]
fn exponential_solution_gives_exact_constant_flux() {
    // u = c0 + c1 e^{q·x} has flux D∇u − bu = −b c0, and d(u_I) = G(J(u)).
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..20 {
        let geom = random_simplex(&mut rng, 2);
        let d = random_spd(&mut rng, 2);
        let qh = rng.gen_range(0.1..20.0);
        let q = random_q(&mut rng, 2, qh, geom.diameter);
        let coeff = coefficients(d.clone(), &q);
        let fr = FluxRecovery::new(&geom, &coeff, &HighOrderOptions::new(1)).unwrap();
        let (c0, c1) = (0.8, -0.4);
        let c = geom.barycenter();
        // e^{q·x} relative to the barycenter keeps the numbers tame.
        let u: Vec<f64> = geom
            .vertex_coords
            .iter()
            .map(|x| c0 + c1 * (q[0] * (x[0] - c[0]) + q[1] * (x[1] - c[1])).exp())
            .collect();
        let from_nodes = fr.compute_d(&u);
        let flux: Vec<f64> = coeff.b.iter().map(|b| -b * c0).collect();
        let d_inv = d.clone().try_inverse().unwrap();
        let from_flux = fr.g_of_flux(&constant_field(2, &mat_vec(&d_inv, &flux)));
        for (a, b) in from_nodes.iter().zip(&from_flux) {
            assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()), "{a} vs {b}");
        }
        let recovered = fr.recover(&from_nodes);
        let field = vec_eval(&fr.flux_field(&recovered), &[0.3, 0.3]);
        for (got, want) in field.iter().zip(&flux) {
            assert!((got - want).abs() <= 1e-11 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn recovery_is_invariant_under_exponent_origin() {
    let mut rng = StdRng::seed_from_u64(15);
    for order in [1, 2] {
        for _ in 0..20 {
            let geom = random_simplex(&mut rng, 2);
            let qh = rng.gen_range(0.0..30.0);
            let q = random_q(&mut rng, 2, qh, geom.diameter);
            let coeff = coefficients(random_spd(&mut rng, 2), &q);
            let nodes = spacetime_fem::fem::local_nodes(order, 2);
            let u: Vec<f64> = (0..nodes.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let recover = |origin: ExponentOrigin| -> Vec<f64> {
                let mut opts = HighOrderOptions::new(order);
                opts.adjoint = Some(AdjointWeighting::Normalized);
                opts.origin = origin;
                let fr = FluxRecovery::new(&geom, &coeff, &opts).unwrap();
                fr.recover(&fr.compute_d(&u))
            };
            let base = recover(ExponentOrigin::Barycenter);
            let size = base.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for origin in [geom.vertex_coords[0].clone(), vec![5.0, -7.0]] {
                let other = recover(ExponentOrigin::Point(origin));
                for (a, b) in base.iter().zip(&other) {
                    assert!((a - b).abs() <= 1e-9 * size, "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn order_one_matches_bernoulli_edge_scheme() {
    let mut rng = StdRng::seed_from_u64(16);
    for n in [2, 3] {
        for _ in 0..30 {
            let geom = random_simplex(&mut rng, n);
            let eps = 10f64.powf(rng.gen_range(-3.0..0.0));
            let d = random_spd(&mut rng, n) * eps;
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let coeff = EafeCoefficients::new(d, b, 0.0).unwrap();
            let low = local_eafe_matrix(&geom, &coeff);
            let high = local_high_order_matrix(&geom, &coeff, &HighOrderOptions::new(1)).unwrap();
            assert!(rel_frobenius(&high, &low) <= 1e-10, "{:e}", rel_frobenius(&high, &low));
        }
    }
}

#[test]
fn no_convection_gives_galerkin_stiffness() {
    let mut rng = StdRng::seed_from_u64(17);
    for (n, order) in [(2, 1), (3, 1)] {
        let geom = random_simplex(&mut rng, n);
        let d = random_spd(&mut rng, n);
        let coeff = EafeCoefficients::new(d.clone(), vec![0.0; n], 0.0).unwrap();
        let a = local_high_order_matrix(&geom, &coeff, &HighOrderOptions::new(order)).unwrap();
        assert!(rel_frobenius(&a, &local_diffusion_matrix(&geom, &d)) < 1e-12);
    }
}

#[test]
fn euclidean_adjoint_reports_overflow() {
    let geom = geometry(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
    let coeff = coefficients(DMatrix::identity(2, 2), &[2000.0, -2000.0]);
    let mut opts = HighOrderOptions::new(1);
    opts.adjoint = Some(AdjointWeighting::Euclidean);
    assert!(matches!(FluxRecovery::new(&geom, &coeff, &opts), Err(Error::CoefficientOutOfRange { .. })));
    // The scaled adjoints have no such limit.
    opts.adjoint = None;
    assert!(FluxRecovery::new(&geom, &coeff, &opts).is_ok());
}

#[test]
fn edge_harmonic_adjoint_needs_order_one() {
    let geom = geometry(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
    let mut opts = HighOrderOptions::new(2);
    opts.adjoint = Some(AdjointWeighting::EdgeHarmonic);
    let coeff = coefficients(DMatrix::identity(2, 2), &[1.0, 0.0]);
    assert!(matches!(FluxRecovery::new(&geom, &coeff, &opts), Err(Error::Unsupported(_))));
}

fn constant_problem_deviation(order: usize, divisions: usize) -> f64 {
    let mut problem = steady_manufactured_2d([2.0, -1.0]);
    problem.source = std::sync::Arc::new(|_: &[f64]| 0.0);
    problem.dirichlet = std::sync::Arc::new(|_: &[f64]| 1.0);
    let mesh = problem.mesh(divisions).unwrap();
    let system = assemble_high_order(&mesh, &problem, &HighOrderOptions::new(order)).unwrap();
    let (u, _) = solve(&system.matrix, &system.rhs, &SolverOptions::default()).unwrap();
    u.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
}

#[test]
fn constants_are_reproduced_by_order_one_assembly() {
    // u = 1 with constant β solves −div(∇u − βu) = 0, and the endpoint form
    // of d makes the recovered flux −β exact.
    assert!(constant_problem_deviation(1, 4) < 1e-12);
}

#[test]
fn constants_are_approached_by_order_two_assembly() {
    // For order 2, d re-interpolates e^{−q·x} into P2, so constants are only
    // reproduced up to the interpolation error.
    let coarse = constant_problem_deviation(2, 4);
    let fine = constant_problem_deviation(2, 8);
    assert!(coarse < 1e-3 && fine < coarse / 4.0, "{coarse:e} {fine:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomial_fluxes_are_recovered(seed in any::<u64>(), order in 1usize..=2, qh in 0.0f64..50.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let geom = random_simplex(&mut rng, 2);
        let d = random_spd(&mut rng, 2);
        let q = random_q(&mut rng, 2, qh, geom.diameter);
        let mut opts = HighOrderOptions::new(order);
        opts.adjoint = Some(AdjointWeighting::Normalized);
        let fr = FluxRecovery::new(&geom, &coefficients(d.clone(), &q), &opts).unwrap();
        prop_assert!(fr.condition < UNISOLVENCE_CONDITION_LIMIT);
        let coeffs: Vec<f64> = (0..fr.space.m0()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let flux = fr.flux_field(&coeffs);
        let g = fr.g_of_flux(&vec_transform(&d.try_inverse().unwrap(), &flux));
        let rec = fr.flux_field(&fr.recover(&g));
        let rule = QuadratureRule::simplex(2, 4);
        let (mut err, mut size) = (0.0f64, 0.0f64);
        for lam in &rule.points {
            let (a, b) = (vec_eval(&rec, &lam[1..]), vec_eval(&flux, &lam[1..]));
            for k in 0..2 {
                err = err.max((a[k] - b[k]).abs());
                size = size.max(b[k].abs());
            }
        }
        prop_assert!(err <= 1e-10 * size, "residual {:e}", err / size);
    }
}
