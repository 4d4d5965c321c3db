use std::f64::consts::PI;

use mhrecon::bem::*;
use mhrecon::mesh::Vec3;
use mhrecon::shapes;
use mhrecon::subdivision::SurfaceBasis;
use mhrecon::{ControlMesh, Error};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

fn sphere_error(level: usize, kappa: f64, alpha: f64) -> f64 {
    let m = shapes::limit_fitted_sphere(level, 1.0);
    let b = SurfaceBasis::new(&m);
    let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
    let dirs = lebedev26();
    let f = scatter_far_fields(&g, kappa, alpha, &[Vec3::z()], &dirs.directions).unwrap();
    let o = sphere_farfield_oracle(1.0, kappa, &Vec3::z(), &dirs.directions);
    relative_l2(&f[0], &o, &dirs.weights).unwrap()
}

#[test]
fn sphere_matches_partial_waves_and_improves() {
    let e1 = sphere_error(1, 2.0, 0.5);
    let e2 = sphere_error(2, 2.0, 0.5);
    assert!(e2 < 0.02, "{e2}");
    assert!(e2 < e1, "{e2} vs {e1}");
}

#[test]
fn single_layer_is_symmetric() {
    let m = shapes::bumpy_cube(0);
    let b = SurfaceBasis::new(&m);
    let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
    let z = assemble_system(&g, 1.3, 0.0).unwrap().z;
    assert!((&z - z.transpose()).norm() <= 1e-12 * z.norm());
    // Burton–Miller part is not symmetric
    let z = assemble_system(&g, 1.3, 0.5).unwrap().z;
    assert!((&z - z.transpose()).norm() > 1e-6 * z.norm());
}

#[test]
fn laplace_single_layer_of_constant_on_sphere() {
    // ∫ 1/(4π|x−y|) dy = a for x on a sphere of radius a
    let a = 1.7;
    let m = shapes::limit_fitted_sphere(2, a);
    let b = SurfaceBasis::new(&m);
    let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
    let z = assemble_system(&g, 0.0, 0.0).unwrap().z;
    let ones = DVector::from_element(m.num_vertices(), Complex64::new(1.0, 0.0));
    let lhs = &z * &ones;
    let mass = g.mass_matrix();
    let rhs = mass.map(|x| Complex64::new(a * x, 0.0)) * &ones;
    assert!((&lhs - &rhs).norm() < 5e-3 * rhs.norm(), "{}", (&lhs - &rhs).norm() / rhs.norm());
}

#[test]
fn zero_wavenumber_needs_pure_single_layer() {
    let m = shapes::icosahedron();
    let b = SurfaceBasis::new(&m);
    let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
    assert!(matches!(assemble_system(&g, 0.0, 0.5), Err(Error::Validation(_))));
    assert!(matches!(assemble_system(&g, 1.0, 1.5), Err(Error::Validation(_))));
    assert!(IncidentWave::new(Vec3::zeros(), 1.0).is_err());
}

#[test]
fn translated_scatterer_shifts_far_field_phase() {
    let m = shapes::ellipsoid(1, [1.2, 0.9, 0.7]);
    let t = Vec3::new(0.3, -0.2, 0.5);
    let moved = m.translated(&t);
    let kappa = 1.5;
    let d = Vec3::new(1.0, 1.0, 0.0).normalize();
    let dirs = fibonacci(20);
    let far = |mesh: &ControlMesh| {
        let b = SurfaceBasis::new(mesh);
        let g = BemGeometry::new(mesh, &b, &BemQuadrature::default()).unwrap();
        scatter_far_fields(&g, kappa, 0.5, &[d], &dirs.directions).unwrap().remove(0)
    };
    let f0 = far(&m);
    let f1 = far(&moved);
    for ((a, b), r) in f0.iter().zip(&f1).zip(&dirs.directions) {
        let shift = Complex64::from_polar(1.0, kappa * (r - d).dot(&t));
        assert!((a * shift - b).norm() < 1e-9 * a.norm().max(1e-3), "{a} {b}");
    }
}

#[test]
fn direction_mismatch_is_reported() {
    let a = vec![Complex64::new(1.0, 0.0); 3];
    assert!(matches!(relative_l2(&a, &a[..2], &[1.0, 1.0]), Err(Error::DirectionMismatch(_))));
    let p = FarFieldPattern { directions: fibonacci(3), values: a.clone() };
    let q = FarFieldPattern { directions: fibonacci(4), values: vec![a[0]; 4] };
    assert!(matches!(epsilon_l2(&p, &q), Err(Error::DirectionMismatch(_))));
    assert_eq!(epsilon_l2(&p, &p).unwrap(), 0.0);
    let twice = FarFieldPattern { values: a.iter().map(|z| z * 2.0).collect(), ..p.clone() };
    assert!((epsilon_l2(&twice, &p).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn far_field_dataset_round_trip() {
    let mut ds = FarFieldDataset::zeros(vec![1.0, 2.5], vec![Vec3::z(), Vec3::x()], fibonacci(5));
    for (i, v) in ds.values.iter_mut().enumerate() {
        *v = Complex64::new(i as f64 * 0.1, -(i as f64).sqrt());
    }
    let back = FarFieldDataset::from_text(ds.to_text().as_bytes()).unwrap();
    assert!(back.same_layout(&ds));
    for (a, b) in back.values.iter().zip(&ds.values) {
        assert!((a - b).norm() < 1e-14);
    }
    let pl = FarFieldDataset::from_text(ds.to_phaseless().to_text().as_bytes()).unwrap();
    assert!(pl.phaseless);
    for (a, b) in pl.magnitudes().iter().zip(ds.magnitudes()) {
        assert!((a - b).abs() < 1e-14 * b.max(1.0));
    }
    assert!(FarFieldDataset::from_text("mhrecon-farfield 1\nphaseless maybe\n".as_bytes()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// F(r̂; d) = F(−d; −r̂).
    #[test]
    fn reciprocity(t1 in 0.1f64..3.0, p1 in -3.1f64..3.1, t2 in 0.1f64..3.0, p2 in -3.1f64..3.1) {
        let kappa = 1.8;
        let mesh = shapes::ellipsoid(1, [1.1, 0.8, 0.6]);
        let b = SurfaceBasis::new(&mesh);
        let g = BemGeometry::new(&mesh, &b, &BemQuadrature::default()).unwrap();
        let sys = assemble_system(&g, kappa, 0.5).unwrap();
        let fac = factor(&sys).unwrap();
        let (d, r) = (from_angles(t1, p1), from_angles(t2, p2));
        let solve = |inc: Vec3, obs: Vec3| {
            let w = IncidentWave::new(inc, kappa).unwrap();
            let sol = fac.solve(&assemble_rhs(&g, &w, 0.5).unwrap()).unwrap();
            far_field_values(&g, &sol, &[obs], kappa)[0]
        };
        let a = solve(d, r);
        let b2 = solve(-r, -d);
        prop_assert!((a - b2).norm() < 2e-2 * a.norm().max(0.05), "{} vs {}", a, b2);
    }

    /// Scaling the incident amplitude scales the solution linearly.
    #[test]
    fn amplitude_linearity(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let m = shapes::icosahedron();
        let b = SurfaceBasis::new(&m);
        let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
        let w = IncidentWave::new(Vec3::x(), PI / 2.0).unwrap();
        let c = Complex64::new(re, im);
        let v1 = assemble_rhs(&g, &w, 0.3).unwrap();
        let v2 = assemble_rhs(&g, &w.with_amplitude(c), 0.3).unwrap();
        prop_assert!((v1 * c - v2).norm() <= 1e-12 * (1.0 + c.norm()) * 10.0);
    }
}

#[test]
fn plane_wave_basics() {
    let w = IncidentWave::new(Vec3::new(0.0, 3.0, 4.0), 2.5).unwrap();
    let (v0, _) = plane_wave(&w, &Vec3::zeros());
    assert_eq!(v0, Complex64::new(1.0, 0.0));
    for r in [Vec3::new(1.0, -2.0, 0.3), Vec3::new(-7.0, 0.1, 2.0)] {
        let (v, g) = plane_wave(&w, &r);
        assert!((v.norm() - 1.0).abs() < 1e-15);
        let dd = (g[0] * w.direction.x + g[1] * w.direction.y + g[2] * w.direction.z) / v;
        assert!((dd - Complex64::new(0.0, -2.5)).norm() < 1e-14);
    }
}

#[test]
fn identity_system_solves_trivially() {
    let n = 4;
    let z = nalgebra::DMatrix::<Complex64>::identity(n, n);
    let sys = BemSystem { z, kappa: 1.0, alpha: 0.5, beta: Complex64::new(0.0, 1.0) };
    let mut e1 = DVector::from_element(n, Complex64::new(0.0, 0.0));
    e1[0] = Complex64::new(1.0, 0.0);
    let sol = solve_density(&sys, &e1).unwrap();
    assert_eq!(sol.coeffs, e1);
    assert!(sol.residual <= 1e-10);
    let sing = BemSystem { z: nalgebra::DMatrix::from_element(n, n, Complex64::new(1.0, 0.0)), ..sys };
    assert!(matches!(solve_density(&sing, &e1), Err(Error::SingularMatrix { .. })));
}

#[test]
fn small_wavenumber_approaches_laplace() {
    let m = shapes::limit_fitted_sphere(1, 1.0);
    let b = SurfaceBasis::new(&m);
    let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
    let z0 = assemble_system(&g, 0.0, 0.0).unwrap().z;
    let z1 = assemble_system(&g, 1e-3, 0.0).unwrap().z;
    for (a, b) in z1.iter().zip(z0.iter()) {
        assert!((a - b).norm() <= 0.01 * b.norm(), "{a} {b}");
    }
}

#[test]
fn single_layer_rhs_is_mass_weighted_interpolation() {
    // α = 0: v = ∫ψ Φⁱ ≈ B · (Φⁱ at limit points), up to interpolation error
    let m = shapes::limit_fitted_sphere(2, 1.0);
    let b = SurfaceBasis::new(&m);
    let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
    let w = IncidentWave::new(Vec3::new(1.0, 0.5, 0.2), 0.8).unwrap();
    let v = assemble_rhs(&g, &w, 0.0).unwrap();
    let mass = g.mass_matrix().map(|x| Complex64::new(x, 0.0));
    let nodal = DVector::from_iterator(m.num_vertices(), m.vertices().iter().map(|p| plane_wave(&w, p).0));
    let other = mass * nodal;
    assert!((&v - &other).norm() < 0.02 * v.norm(), "{}", (&v - &other).norm() / v.norm());
}

#[test]
fn zero_density_and_low_frequency_far_field() {
    let m = shapes::limit_fitted_sphere(1, 1.0);
    let b = SurfaceBasis::new(&m);
    let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
    let dirs = lebedev26();
    let zero = BemSolution { coeffs: DVector::from_element(m.num_vertices(), Complex64::new(0.0, 0.0)), residual: 0.0 };
    assert!(far_field(&g, &zero, &dirs, 1.0).values.iter().all(|z| z.norm() == 0.0));
    let ones = BemSolution { coeffs: DVector::from_element(m.num_vertices(), Complex64::new(1.0, 0.0)), residual: 0.0 };
    let p = far_field(&g, &ones, &dirs, 1e-9);
    let area: f64 = g.mass_matrix().sum();
    for z in &p.values {
        assert!((z + Complex64::new(area / (4.0 * PI), 0.0)).norm() < 1e-4 * area);
    }
}

#[test]
fn finite_over_wavenumber_range() {
    let m = shapes::limit_fitted_sphere(1, 1.0);
    let b = SurfaceBasis::new(&m);
    let g = BemGeometry::new(&m, &b, &BemQuadrature::default()).unwrap();
    for kappa in [0.1, 1.0, 5.0, 20.0] {
        let f = scatter_far_fields(&g, kappa, 0.5, &[Vec3::z()], &lebedev26().directions).unwrap();
        assert!(f[0].iter().all(|z| z.re.is_finite() && z.im.is_finite() && z.norm() < 1e3));
    }
}
