//! Test and demo geometries.

use crate::mesh::{ControlMesh, Vec3};

pub fn tetrahedron() -> ControlMesh {
    let s = 1.0 / 3f64.sqrt();
    let v = [
        [s, s, s],
        [s, -s, -s],
        [-s, s, -s],
        [-s, -s, s],
    ];
    ControlMesh::from_arrays(&v, &[[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
        .expect("tetrahedron is valid")
}

/// Icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> ControlMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let norm = (1.0 + t * t).sqrt();
    let v: Vec<[f64; 3]> = raw.iter().map(|p| p.map(|x| x / norm)).collect();
    let f = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    ControlMesh::from_arrays(&v, &f).expect("icosahedron is valid")
}

/// Icosahedron subdivided `level` times with every control vertex
/// projected back onto the unit sphere after each step.
pub fn icosphere(level: usize) -> ControlMesh {
    let mut m = icosahedron();
    for _ in 0..level {
        m = m.loop_subdivide().expect("subdivision of a valid mesh");
        m = m.mapped(|p| p.normalize());
    }
    m
}

/// Icosphere whose vertex limit points lie on the sphere of radius `r`.
pub fn limit_fitted_sphere(level: usize, r: f64) -> ControlMesh {
    let m = icosphere(level);
    let targets: Vec<Vec3> = m.vertices().iter().map(|p| p * r).collect();
    m.fit_limit_positions(&targets).expect("sizes match")
}

/// Axis-aligned ellipsoid control mesh (icosphere scaled per axis).
pub fn ellipsoid(level: usize, semi_axes: [f64; 3]) -> ControlMesh {
    icosphere(level).mapped(|p| Vec3::new(p.x * semi_axes[0], p.y * semi_axes[1], p.z * semi_axes[2]))
}

/// Ellipsoid whose vertex limit points lie on the analytic ellipsoid.
pub fn limit_fitted_ellipsoid(level: usize, semi_axes: [f64; 3]) -> ControlMesh {
    let m = ellipsoid(level, semi_axes);
    let targets = m.vertices().to_vec();
    m.fit_limit_positions(&targets).expect("sizes match")
}

/// Rounded cube (superellipsoid, exponent 6, half-width 1) with six
/// Gaussian bumps on the face centres and a low-amplitude ripple.
pub fn bumpy_cube(level: usize) -> ControlMesh {
    icosphere(level).mapped(bumpy_cube_point)
}

pub fn bumpy_cube_point(d: &Vec3) -> Vec3 {
    let d = d.normalize();
    let p = 6.0;
    let q = (d.x.abs().powf(p) + d.y.abs().powf(p) + d.z.abs().powf(p)).powf(1.0 / p);
    let mut r = 1.0 / q;
    for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
        for s in [1.0, -1.0] {
            let c = d.dot(&(axis * s));
            r += 0.25 * (-(1.0 - c) * 12.0).exp();
        }
    }
    r += 0.03 * (5.0 * d.x).sin() * (5.0 * d.y).sin() * (5.0 * d.z).cos();
    d * r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_outward_oriented() {
        for m in [tetrahedron(), icosahedron(), icosphere(2), bumpy_cube(2)] {
            let c = m.centroid();
            for f in m.faces() {
                let [a, b, d] = f.map(|i| m.vertices()[i]);
                let n = (b - a).cross(&(d - a));
                assert!(n.dot(&((a + b + d) / 3.0 - c)) > 0.0);
            }
        }
    }

    #[test]
    fn limit_fit_hits_targets() {
        let m = limit_fitted_sphere(2, 1.0);
        for p in m.limit_positions() {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }
}
