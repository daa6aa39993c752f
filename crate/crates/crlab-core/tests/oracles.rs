//! Expected values from closed forms computed independently of the library.

use crlab_core::acs_pointwise::{nijenhuis_max, phi_matrix, DeformationTensorE};
use crlab_core::bundle_autos::{connection_integral, geodesic, parallel_factor, sigma_point};
use crlab_core::deformation_ops::{mu_constant, DeformationComplex, DeformationPair};
use crlab_core::fem::LagrangeSpace;
use crlab_core::line_bundle::{
    curvature_target, ddbar_fd, group_covariance_defect, model_gamma, model_log_metric, reduced_tw_curvature, HermitianMetricField,
};
use crlab_core::mobius_fuchsian::{fuchsian_group, group_relation_residual, hyperbolic_distance, relation_condition, RegularPolygon};
use crlab_core::surface_mesh::{hyperbolic_area, triangle_area, SectionField, SurfaceMesh};
use crlab_core::surface_pde::{laplacian_kernel_dim, solve_hermitian_metric, solve_weak_poisson, yamabe_residual, stiffness};
use crlab_core::{Complex64 as C, CrError};
use std::f64::consts::PI;

// 2 acosh(1 + sqrt 2) and 2 acosh(2 + sqrt 3): sides of the regular octagon
// and 12-gon with interior angles pi/4 and pi/6.
const OCTAGON_SIDE: f64 = 3.057141838961996;
const DODECAGON_SIDE: f64 = 3.9833047820988736;
// acosh(1 + sqrt 2): centre to side midpoint of the octagon.
const OCTAGON_INRADIUS: f64 = 1.528570919480998;
// -ln cosh(0.3), tanh(0.3)
const LOG_SECH_03: f64 = -0.044340769925940306;
const TANH_03: f64 = 0.2913126124515909;

fn angle_from_sides(opposite: f64, b: f64, c: f64) -> f64 {
    ((b.cosh() * c.cosh() - opposite.cosh()) / (b.sinh() * c.sinh())).acos()
}

#[test]
fn polygon_side_lengths() {
    assert!((RegularPolygon::new(2).side_length() - OCTAGON_SIDE).abs() < 1e-12);
    assert!((RegularPolygon::new(3).side_length() - DODECAGON_SIDE).abs() < 1e-12);
    assert!((RegularPolygon::new(2).midpoint_distance - OCTAGON_INRADIUS).abs() < 1e-12);
}

#[test]
fn polygon_corner_angles() {
    for g in 2..=4 {
        let p = RegularPolygon::new(g);
        let o = C::new(0.0, 0.0);
        let (a, b) = p.side_endpoints(1);
        let (ra, rb, s) = (hyperbolic_distance(o, a), hyperbolic_distance(o, b), hyperbolic_distance(a, b));
        let half = angle_from_sides(rb, ra, s);
        assert!((2.0 * half - 2.0 * PI / (4 * g) as f64).abs() < 1e-10, "g={g}");
    }
}

#[test]
fn triangle_area_against_angle_defect() {
    let tris = [
        [C::new(0.1, 0.1), C::new(0.15, 0.1), C::new(0.12, 0.14)],
        [C::new(0.5, -0.2), C::new(0.52, -0.2), C::new(0.51, -0.18)],
    ];
    for z in tris {
        let (a, b, c) = (hyperbolic_distance(z[1], z[2]), hyperbolic_distance(z[0], z[2]), hyperbolic_distance(z[0], z[1]));
        let exact = PI - angle_from_sides(a, b, c) - angle_from_sides(b, a, c) - angle_from_sides(c, a, b);
        assert!((triangle_area(z) - exact).abs() / exact < 1e-4);
    }
}

#[test]
fn euler_characteristic_and_area() {
    for g in 2..=3 {
        for r in 0..=2 {
            let m = SurfaceMesh::regular(g, r).unwrap();
            assert_eq!(m.euler_characteristic(), 2 - 2 * g as i64);
            let area: f64 = m.lumped_mass().iter().sum();
            assert!((area - hyperbolic_area(&m)).abs() < 1e-10);
        }
    }
    let m = SurfaceMesh::regular(2, 3).unwrap();
    assert!((hyperbolic_area(&m) / (4.0 * PI) - 1.0).abs() < 1e-5);
}

#[test]
fn bolza_relation_is_tight() {
    assert!(group_relation_residual(&fuchsian_group(2, 1).unwrap()) < 1e-10);
}

#[test]
fn relation_residuals() {
    for g in 2..=4 {
        let grp = fuchsian_group(g, (g - 1) as u32).unwrap();
        assert!(group_relation_residual(&grp) < 1e-13 * relation_condition(&grp), "g={g}");
        let pts: Vec<C> = (0..10).map(|k| C::from_polar(0.05 * k as f64, k as f64)).collect();
        assert!(group_covariance_defect(&grp, &pts) < 1e-10);
    }
}

#[test]
fn connection_and_curvature_closed_forms() {
    let e = 2.0;
    for z in [C::new(0.0, 0.0), C::new(0.3, -0.4), C::new(-0.6, 0.1)] {
        let h = 1e-5;
        let lh = |z: C| model_log_metric(z, e);
        let dx = (lh(z + h) - lh(z - h)) / (2.0 * h);
        let dy = (lh(z + C::new(0.0, h)) - lh(z - C::new(0.0, h))) / (2.0 * h);
        let dz = C::new(dx, -dy) * 0.5;
        assert!((model_gamma(z, e) - dz).norm() < 1e-8);
        assert!((ddbar_fd(&lh, z, 1e-3) - curvature_target(z, e)).abs() / curvature_target(z, e) < 1e-8);
    }
}

#[test]
fn mu_is_minus_quarter_e() {
    let mesh = SurfaceMesh::regular(2, 3).unwrap();
    let (mu, spread) = mu_constant(&mesh, &|z| model_gamma(z, 1.0)).unwrap();
    assert!((mu + 0.25).abs() < 1e-3 && spread < 1e-3);
}

#[test]
fn radial_transport_from_origin() {
    let v = C::from_polar(0.3, 0.7);
    let e = 1.0;
    let g = |z: C| model_gamma(z, e);
    let i = connection_integral(&g, C::new(0.0, 0.0), v).unwrap();
    assert!((i.re + LOG_SECH_03).abs() < 1e-10 && i.im.abs() < 1e-12);
    assert!((parallel_factor(&g, C::new(0.0, 0.0), v).unwrap().re - (-i.re).exp()).abs() < 1e-15);
    let z1 = geodesic(C::new(0.0, 0.0), v, 1.0).unwrap();
    assert!((z1.norm() - TANH_03).abs() < 1e-14);
    let vs = C::new(0.02, -0.01);
    let (b, l) = sigma_point(&g, C::new(0.0, 0.0), v, vs).unwrap();
    assert!((b - z1).norm() < 1e-14);
    assert!((l - (vs + LOG_SECH_03)).norm() < 1e-10);
}

#[test]
fn metric_solve_recovers_model() {
    let mesh = SurfaceMesh::regular(2, 2).unwrap();
    let mut h0 = HermitianMetricField::model(&mesh, 1.0);
    let reps = mesh.representatives();
    let delta: Vec<f64> = reps.iter().map(|&v| 0.2 * mesh.vertices[v].re - 0.1 * mesh.vertices[v].norm_sqr()).collect();
    for (l, d) in h0.log_h.iter_mut().zip(&delta) {
        *l += d;
    }
    let u = solve_hermitian_metric(&mesh, &h0, 1, 0).unwrap();
    let shift: Vec<f64> = u.values.iter().zip(&delta).map(|(a, d)| a.re + d).collect();
    let spread = shift.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - shift.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-9, "{spread}");
}

#[test]
fn poisson_rejects_nonzero_mean() {
    let mesh = SurfaceMesh::regular(2, 1).unwrap();
    let b = mesh.lumped_mass();
    assert!(matches!(solve_weak_poisson(&mesh, &b, 0), Err(CrError::Solvability { .. })));
}

#[test]
fn laplacian_has_only_constants() {
    let mesh = SurfaceMesh::regular(2, 2).unwrap();
    assert_eq!(laplacian_kernel_dim(&mesh).unwrap().0, 1);
}

#[test]
fn yamabe_residual_vanishes_at_one() {
    let mesh = SurfaceMesh::regular(2, 2).unwrap();
    let n = mesh.n_quotient();
    let r = yamabe_residual(&stiffness(&mesh), &mesh.lumped_mass(), &vec![-1.0; n], -1.0, &vec![1.0; n]);
    assert!(r.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn tw_certificate_for_model() {
    let mesh = SurfaceMesh::regular(2, 1).unwrap();
    let c = reduced_tw_curvature(&|z| 1.0 / (1.0 - z.norm_sqr()).powi(2), 1.0, &mesh).unwrap();
    assert!(c.scalar_curvature.iter().all(|&r| r == -1.0) && c.torsion == 0.0);
    assert!(reduced_tw_curvature(&|z| 1.1 / (1.0 - z.norm_sqr()).powi(2), 1.0, &mesh).is_err());
}

#[test]
fn constants_are_gauge_kernel() {
    let mesh = SurfaceMesh::regular(2, 1).unwrap();
    let cx = DeformationComplex::new(&mesh, 2, -0.25).unwrap();
    let n = cx.n_dofs();
    let v = DeformationPair {
        v1: SectionField { weight: (-1, 0), values: vec![C::new(0.0, 0.0); n] },
        v: SectionField { weight: (0, 0), values: vec![C::new(0.7, -0.2); n] },
    };
    let pv = cx.apply_p(&v).unwrap();
    assert!(pv.values.iter().all(|x| x.norm() < 1e-12));
    assert_eq!(LagrangeSpace::new(&mesh, 2).unwrap().n_dofs(), n);
}

#[test]
fn fibre_dependent_structure_is_not_integrable() {
    let invariant = |p: &[f64; 4]| {
        let z = C::new(p[0], p[1]);
        phi_matrix(&DeformationTensorE { e11bar: z * 0.3, e1star: C::new(0.1, 0.0) }.matrix(C::new(p[2], p[3]))).unwrap()
    };
    let dependent = |p: &[f64; 4]| {
        let w = C::new(p[2], p[3]);
        phi_matrix(&DeformationTensorE { e11bar: C::new(0.3 * w.norm_sqr(), 0.0), e1star: C::new(0.0, 0.0) }.matrix(w)).unwrap()
    };
    let p = [0.1, -0.2, 0.8, 0.3];
    assert!(nijenhuis_max(&invariant, &p, 1e-3).unwrap() < 1e-6);
    let a = nijenhuis_max(&dependent, &p, 1e-3).unwrap();
    let b = nijenhuis_max(&dependent, &p, 5e-4).unwrap();
    assert!(a > 1e-2 && (a - b).abs() / a < 1e-3, "{a} {b}");
}
