use mhrecon::mesh::{ControlMesh, Vec3};
use mhrecon::shapes;
use mhrecon::subdivision::{eval_patch, limit_area, BarycentricPoint, SurfaceBasis, TriangleQuadrature};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng) -> BarycentricPoint {
    let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    BarycentricPoint::new(u, v).unwrap()
}

#[test]
fn translation_equivariance() {
    let m = shapes::bumpy_cube(1);
    let t = Vec3::new(0.3, -1.2, 4.0);
    let shifted = m.translated(&t);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for f in [0, 7, 33] {
        let p = random_point(&mut rng);
        let a = eval_patch(&m, f, p).unwrap();
        let b = eval_patch(&shifted, f, p).unwrap();
        assert!((b.position - a.position - t).norm() < 1e-13);
        for (ga, gb) in a.surface_gradients.iter().zip(&b.surface_gradients) {
            assert!((ga - gb).norm() < 1e-12);
        }
    }
}

#[test]
fn sphere_limit_radius_matches_fine_subdivision() {
    // Compare the evaluated limit surface with vertex limit points of three
    // further explicit subdivisions of the same control net.
    let m = shapes::icosphere(3);
    let basis = SurfaceBasis::new(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let f = rng.random_range(0..m.num_faces());
        let e = basis.eval(&m, f, random_point(&mut rng)).unwrap();
        assert!((e.position.norm() - 1.0).abs() < 2e-2);
    }
    let fine = m.subdivided(3).unwrap();
    let lim = fine.limit_positions();
    let (lo, hi) = lim.iter().fold((f64::MAX, 0.0f64), |(lo, hi), p| (lo.min(p.norm()), hi.max(p.norm())));
    // every evaluated point must fall in the radial band of true limit points
    for _ in 0..200 {
        let f = rng.random_range(0..m.num_faces());
        let r = basis.eval(&m, f, random_point(&mut rng)).unwrap().position.norm();
        assert!(r > lo - 1e-3 && r < hi + 1e-3);
    }
}

#[test]
fn limit_points_of_subdivided_mesh_lie_on_evaluated_surface() {
    // Each edge vertex of the once-subdivided mesh maps to a known parameter
    // of a coarse patch; its limit point must agree with evaluation.
    let m = shapes::icosahedron();
    let fine = m.subdivided(1).unwrap();
    let lim = fine.limit_positions();
    let basis = SurfaceBasis::new(&m);
    let nv = m.num_vertices();
    for (f, &[a, b, c]) in m.faces().iter().enumerate() {
        for (edge, p) in [((a, b), (0.5, 0.0)), ((b, c), (0.5, 0.5)), ((c, a), (0.0, 0.5))] {
            let e = m.edge_id(edge.0, edge.1).unwrap();
            let got = basis.eval(&m, f, BarycentricPoint::new(p.0, p.1).unwrap()).unwrap().position;
            assert!((got - lim[nv + e]).norm() < 1e-12, "face {f}");
        }
    }
}

#[test]
fn seam_continuity_in_irregular_patch() {
    let m = shapes::icosahedron();
    let basis = SurfaceBasis::new(&m);
    for &(u, v) in &[(0.25, 0.1), (0.125, 0.05), (0.0625, 0.01), (0.5, 0.2), (0.3, 0.2)] {
        // straddle the child boundaries u = 1/2^k and u + v = 1/2^k
        let eps = 1e-13;
        let a = basis.eval(&m, 4, BarycentricPoint::new(u - eps, v).unwrap()).unwrap();
        let b = basis.eval(&m, 4, BarycentricPoint::new(u + eps, v).unwrap()).unwrap();
        assert!((a.position - b.position).norm() < 1e-10);
    }
}

#[test]
fn compact_support() {
    // moving a vertex outside the stencil leaves the patch unchanged
    let m = shapes::icosphere(2);
    let basis = SurfaceBasis::new(&m);
    let f = 17;
    let outside = (0..m.num_vertices()).find(|v| !basis.stencil(f).contains(v)).unwrap();
    let mut verts = m.vertices().to_vec();
    verts[outside] += Vec3::new(0.3, 0.2, 0.1);
    let moved = m.with_positions(verts).unwrap();
    let p = BarycentricPoint::new(0.2, 0.3).unwrap();
    let a = basis.eval(&m, f, p).unwrap();
    let b = basis.eval(&moved, f, p).unwrap();
    assert_eq!(a.position, b.position);
}

#[test]
fn area_converges_toward_sphere() {
    let areas: Vec<f64> = (1..=3).map(|l| limit_area(&shapes::icosphere(l)).unwrap()).collect();
    let err: Vec<f64> = areas.iter().map(|a| (a - 4.0 * std::f64::consts::PI).abs()).collect();
    assert!(err[0] > err[1] && err[1] > err[2], "{areas:?}");
}

#[test]
fn mismatched_basis_is_rejected() {
    let basis = SurfaceBasis::new(&shapes::icosahedron());
    let other: ControlMesh = shapes::icosphere(1);
    assert!(basis.eval(&other, 0, BarycentricPoint::new(0.1, 0.1).unwrap()).is_err());
    let q = TriangleQuadrature::new(4).unwrap();
    assert!(basis.area(&other, &q).is_err());
}

fn unity_error(mesh: &ControlMesh, regular: bool, n: usize, seed: u64) -> (f64, f64) {
    let basis = SurfaceBasis::new(mesh);
    let faces: Vec<usize> = (0..mesh.num_faces())
        .filter(|&f| mesh.patch_stencil(f).regular == regular)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut e0, mut e1) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let f = faces[rng.random_range(0..faces.len())];
        let s = basis.sample(f, random_point(&mut rng));
        e0 = e0.max((s.values.iter().sum::<f64>() - 1.0).abs());
        e1 = e1.max(s.du.iter().sum::<f64>().abs()).max(s.dv.iter().sum::<f64>().abs());
    }
    (e0, e1)
}

#[test]
fn partition_of_unity_regular_and_irregular() {
    let m = shapes::bumpy_cube(2);
    let (v, d) = unity_error(&m, true, 1000, 1);
    assert!(v < 1e-12 && d < 1e-12, "{v} {d}");
    let (v, d) = unity_error(&m, false, 1000, 2);
    assert!(v < 1e-9 && d < 1e-9, "{v} {d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn irregular_unity_anywhere(u in 0.0f64..1.0, t in 0.0f64..1.0, face in 0usize..20) {
        let v = (1.0 - u) * t;
        let m = shapes::icosahedron();
        let e = eval_patch(&m, face, BarycentricPoint::new(u, v).unwrap()).unwrap();
        prop_assert!((e.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((e.normal.norm() - 1.0).abs() < 1e-12);
        prop_assert!(e.normal.dot(&e.position) > 0.0);
    }

    #[test]
    fn stencil_is_deterministic(face in 0usize..320) {
        let m = shapes::icosphere(2);
        prop_assert_eq!(m.patch_stencil(face), m.patch_stencil(face));
    }

    #[test]
    fn surface_gradient_is_tangent(face in 0usize..80, u in 0.01f64..0.5, v in 0.01f64..0.45) {
        let m = shapes::bumpy_cube(1);
        let e = eval_patch(&m, face, BarycentricPoint::new(u, v).unwrap()).unwrap();
        let sum: Vec3 = e.surface_gradients.iter().sum();
        prop_assert!(sum.norm() < 1e-9);
        for g in &e.surface_gradients {
            prop_assert!(g.dot(&e.normal).abs() < 1e-9 * (1.0 + g.norm()));
        }
    }
}
