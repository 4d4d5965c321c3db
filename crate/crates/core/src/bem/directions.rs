//! Direction sets on the unit sphere with quadrature weights summing to 4π.

use std::f64::consts::PI;

use crate::mesh::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl DirectionSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Equal weights `4π/n` for the given directions (normalised).
    pub fn uniform(directions: Vec<Vec3>) -> Self {
        let n = directions.len().max(1);
        let weights = vec![4.0 * PI / n as f64; directions.len()];
        Self { directions: directions.into_iter().map(|d| d.normalize()).collect(), weights }
    }
}

/// 26-point Lebedev rule (exact for spherical polynomials of degree 7).
pub fn lebedev26() -> DirectionSet {
    let mut dirs = Vec::with_capacity(26);
    let mut w = Vec::with_capacity(26);
    for a in 0..3 {
        for s in [1.0, -1.0] {
            let mut v = Vec3::zeros();
            v[a] = s;
            dirs.push(v);
            w.push(1.0 / 21.0);
        }
    }
    let r = 0.5f64.sqrt();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for sa in [1.0, -1.0] {
            for sb in [1.0, -1.0] {
                let mut v = Vec3::zeros();
                v[a] = sa * r;
                v[b] = sb * r;
                dirs.push(v);
                w.push(4.0 / 105.0);
            }
        }
    }
    let c = 1.0 / 3f64.sqrt();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                dirs.push(Vec3::new(sx * c, sy * c, sz * c));
                w.push(9.0 / 280.0);
            }
        }
    }
    DirectionSet { directions: dirs, weights: w.into_iter().map(|x| x * 4.0 * PI).collect() }
}

/// Fibonacci-lattice directions with equal weights.
pub fn fibonacci(n: usize) -> DirectionSet {
    let golden = PI * (3.0 - 5f64.sqrt());
    let dirs = (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect();
    DirectionSet::uniform(dirs)
}

/// Unit vector from polar angle θ and azimuth φ.
pub fn from_angles(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// (θ, φ) of a unit vector.
pub fn to_angles(d: &Vec3) -> (f64, f64) {
    let d = d.normalize();
    (d.z.clamp(-1.0, 1.0).acos(), d.y.atan2(d.x))
}
