use crate::error::{Error, Result};

/// Quadrature rule on the reference triangle `u, v >= 0, u + v <= 1`.
/// Weights sum to the reference area 1/2; all nodes are interior.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleQuadrature {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

impl TriangleQuadrature {
    /// Symmetric rule exact for polynomials of total degree `degree`.
    ///
    /// Degrees 1, 2, 4 and 6 use classical symmetric Gauss rules; any
    /// degree up to 40 is also available through collapsed Gauss–Legendre
    /// products.
    pub fn new(degree: usize) -> Result<Self> {
        match degree {
            0 | 1 => Ok(Self::from_orbits(degree.max(1), &[Orbit::Centroid(1.0)])),
            2 => Ok(Self::from_orbits(2, &[Orbit::Edge(1.0 / 6.0, 1.0 / 3.0)])),
            3 | 4 => Ok(Self::from_orbits(
                4,
                &[
                    Orbit::Edge(0.445948490915965, 0.223381589678011),
                    Orbit::Edge(0.091576213509771, 0.109951743655322),
                ],
            )),
            5 | 6 => Ok(Self::from_orbits(
                6,
                &[
                    Orbit::Edge(0.249286745170910, 0.116786275726379),
                    Orbit::Edge(0.063089014491502, 0.050844906370207),
                    Orbit::General(0.053145049844817, 0.310352451033784, 0.082851075618374),
                ],
            )),
            7..=40 => Ok(Self::collapsed(degree)),
            _ => Err(Error::UnsupportedDegree(degree)),
        }
    }

    /// Collapsed (Duffy) tensor Gauss rule exact to `degree`.
    pub fn collapsed(degree: usize) -> Self {
        let n = (degree + 3) / 2;
        let (x, w) = gauss_legendre(n);
        let (y, wy) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (xi, wi) in x.iter().zip(&w) {
            for (eta, we) in y.iter().zip(&wy) {
                points.push([xi * (1.0 - eta), xi * eta]);
                weights.push(wi * we * xi);
            }
        }
        Self { degree, points, weights }
    }

    fn from_orbits(degree: usize, orbits: &[Orbit]) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for o in orbits {
            match *o {
                Orbit::Centroid(w) => {
                    points.push([1.0 / 3.0, 1.0 / 3.0]);
                    weights.push(w);
                }
                Orbit::Edge(a, w) => {
                    let b = 1.0 - 2.0 * a;
                    for p in [[a, a], [b, a], [a, b]] {
                        points.push(p);
                        weights.push(w);
                    }
                }
                Orbit::General(a, b, w) => {
                    let c = 1.0 - a - b;
                    for p in [[a, b], [b, a], [b, c], [c, b], [a, c], [c, a]] {
                        points.push(p);
                        weights.push(w);
                    }
                }
            }
        }
        // tabulated weights are normalised to area 1
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w *= 0.5 / s);
        Self { degree, points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// The rule mapped onto the sub-triangle with parametric corners
    /// `a, b, c`, with weights scaled by the sub-triangle's area ratio.
    pub fn mapped(&self, a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Self {
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - a[0], c[1] - a[1]];
        let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        Self {
            degree: self.degree,
            points: self
                .points
                .iter()
                .map(|p| [a[0] + p[0] * e1[0] + p[1] * e2[0], a[1] + p[0] * e1[1] + p[1] * e2[1]])
                .collect(),
            weights: self.weights.iter().map(|w| w * det).collect(),
        }
    }

    /// Uniform split into `4^levels` congruent sub-triangles.
    pub fn refined(&self, levels: usize) -> Self {
        let mut tris = vec![[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]];
        for _ in 0..levels {
            tris = tris.into_iter().flat_map(split4).collect();
        }
        self.concat(&tris)
    }

    /// Concatenation of the rule mapped onto each sub-triangle.
    pub fn concat(&self, tris: &[[[f64; 2]; 3]]) -> Self {
        let mut out = Self { degree: self.degree, points: Vec::new(), weights: Vec::new() };
        for t in tris {
            let m = self.mapped(t[0], t[1], t[2]);
            out.points.extend(m.points);
            out.weights.extend(m.weights);
        }
        out
    }
}

/// Four congruent children of a parametric triangle.
pub fn split4(t: [[f64; 2]; 3]) -> [[[f64; 2]; 3]; 4] {
    let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let [a, b, c] = t;
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
}

enum Orbit {
    Centroid(f64),
    Edge(f64, f64),
    General(f64, f64, f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of u^p v^q over the reference triangle: p! q! / (p+q+2)!.
    fn monomial(p: u32, q: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(p) * fact(q) / fact(p + q + 2)
    }

    fn exact_to(rule: &TriangleQuadrature, degree: u32, tol: f64) {
        for p in 0..=degree {
            for q in 0..=degree - p {
                let got: f64 = rule.iter().map(|(x, w)| w * x[0].powi(p as i32) * x[1].powi(q as i32)).sum();
                let want = monomial(p, q);
                assert!((got - want).abs() < tol * want.max(1e-3), "deg {degree} u^{p} v^{q}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn degree_one_area() {
        let r = TriangleQuadrature::new(1).unwrap();
        assert_eq!(r.weights.iter().sum::<f64>(), 0.5);
    }

    #[test]
    fn degree_four_on_u2v2() {
        let r = TriangleQuadrature::new(4).unwrap();
        let got: f64 = r.iter().map(|(x, w)| w * x[0] * x[0] * x[1] * x[1]).sum();
        assert!((got - 1.0 / 180.0).abs() < 1e-14);
    }

    #[test]
    fn degree_six_positive_weights() {
        let r = TriangleQuadrature::new(6).unwrap();
        assert!(r.weights.iter().all(|&w| w > 0.0));
        assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rules_are_exact() {
        for d in [1, 2, 4, 6] {
            exact_to(&TriangleQuadrature::new(d as usize).unwrap(), d, 1e-13);
        }
        for d in [7, 10, 15, 20] {
            exact_to(&TriangleQuadrature::new(d as usize).unwrap(), d, 1e-12);
        }
    }

    #[test]
    fn nodes_are_interior() {
        for d in [1, 2, 4, 6, 9, 20] {
            let r = TriangleQuadrature::new(d).unwrap();
            assert!(r.points.iter().all(|p| p[0] > 0.0 && p[1] > 0.0 && p[0] + p[1] < 1.0));
        }
    }

    #[test]
    fn unsupported() {
        assert!(matches!(TriangleQuadrature::new(41), Err(Error::UnsupportedDegree(41))));
    }

    #[test]
    fn refined_rule_keeps_exactness() {
        let r = TriangleQuadrature::new(4).unwrap().refined(2);
        assert_eq!(r.len(), 6 * 16);
        exact_to(&r, 4, 1e-13);
    }

    #[test]
    fn gauss_legendre_small() {
        let (x, w) = gauss_legendre(2);
        let s = 0.5 / 3f64.sqrt();
        assert!((x[0] - (0.5 - s)).abs() < 1e-15 && (x[1] - (0.5 + s)).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15);
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.5, 1.0));
    }
}
