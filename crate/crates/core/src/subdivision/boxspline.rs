//! The twelve quartic box-spline functions of a regular Loop patch.
//!
//! Coefficients are 12× the monomial coefficients of `u^a v^b`, ordered
//! as [`MONOMIALS`]. Basis `k` belongs to stencil vertex `k` at lattice
//! position [`LATTICE`]`[k]`, where the patch corners sit at (0,0), (1,0)
//! and (0,1).

pub const MONOMIALS: [(u32, u32); 15] = [
    (0, 0), (0, 1), (0, 2), (0, 3), (0, 4),
    (1, 0), (1, 1), (1, 2), (1, 3),
    (2, 0), (2, 1), (2, 2),
    (3, 0), (3, 1),
    (4, 0),
];

pub const LATTICE: [(i32, i32); 12] = [
    (0, 0), (1, 0), (0, 1),
    (1, -1), (2, -1), (2, 0), (1, 1),
    (0, 2), (-1, 2), (-1, 1),
    (-1, 0), (0, -1),
];

#[rustfmt::skip]
const COEFFS: [[i32; 15]; 12] = [
    [6, 0, -12, 8, -1, 0, -12, 12, -2, -12, 12, 0, 8, -2, -1],
    [1, 2, 0, -4, 2, 4, 6, -12, 4, 6, -6, 0, -4, -2, -1],
    [1, 4, 6, -4, -1, 2, 6, -6, -2, 0, -12, 0, -4, 4, 2],
    [1, -2, 0, 2, -1, 2, -6, 6, -2, 0, 0, 0, -4, 4, 2],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, -2, -1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 1],
    [0, 0, 0, 2, -1, 0, 0, 6, -2, 0, 6, 0, 2, -2, -1],
    [0, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 2, -1, 0, 0, 0, -2, 0, 0, 0, 0, 0, 0],
    [1, 2, 0, -4, 2, -2, -6, 0, 4, 0, 6, 0, 2, -2, -1],
    [1, -2, 0, 2, -1, -4, 6, 0, -2, 6, -6, 0, -4, 2, 1],
    [1, -4, 6, -4, 1, -2, 6, -6, 2, 0, 0, 0, 2, -2, -1],
];

/// Values and parametric derivatives of the 12 regular basis functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularBasis {
    pub values: [f64; 12],
    pub du: [f64; 12],
    pub dv: [f64; 12],
}

pub fn eval(u: f64, v: f64) -> RegularBasis {
    let mut pu = [1.0; 5];
    let mut pv = [1.0; 5];
    for k in 1..5 {
        pu[k] = pu[k - 1] * u;
        pv[k] = pv[k - 1] * v;
    }
    let mut out = RegularBasis { values: [0.0; 12], du: [0.0; 12], dv: [0.0; 12] };
    for (k, row) in COEFFS.iter().enumerate() {
        let (mut f, mut fu, mut fv) = (0.0, 0.0, 0.0);
        for (&(a, b), &c) in MONOMIALS.iter().zip(row) {
            if c == 0 {
                continue;
            }
            let c = c as f64;
            let (a, b) = (a as usize, b as usize);
            f += c * pu[a] * pv[b];
            if a > 0 {
                fu += c * a as f64 * pu[a - 1] * pv[b];
            }
            if b > 0 {
                fv += c * b as f64 * pu[a] * pv[b - 1];
            }
        }
        out.values[k] = f / 12.0;
        out.du[k] = fu / 12.0;
        out.dv[k] = fv / 12.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SMatrix};

    /// One Loop step on the infinite regular lattice, returning the
    /// stencil of the centre child in terms of the parent stencil.
    fn centre_child_map() -> SMatrix<f64, 12, 12> {
        // fine lattice point (2i, 2j) etc. as affine combination of coarse
        let nbrs = |(i, j): (i32, i32)| [(i + 1, j), (i, j + 1), (i - 1, j + 1), (i - 1, j), (i, j - 1), (i + 1, j - 1)];
        let idx = |p: (i32, i32)| LATTICE.iter().position(|&q| q == p);
        let fine = |p: (i32, i32)| -> Vec<((i32, i32), f64)> {
            let (a, b) = p;
            if a % 2 == 0 && b % 2 == 0 {
                let c = (a / 2, b / 2);
                let mut w = vec![(c, 10.0 / 16.0)];
                w.extend(nbrs(c).into_iter().map(|n| (n, 1.0 / 16.0)));
                w
            } else {
                let (i, j) = (a.div_euclid(2), b.div_euclid(2));
                let (e0, e1, o0, o1) = match (a.rem_euclid(2), b.rem_euclid(2)) {
                    (1, 0) => ((i, j), (i + 1, j), (i, j + 1), (i + 1, j - 1)),
                    (0, 1) => ((i, j), (i, j + 1), (i + 1, j), (i - 1, j + 1)),
                    _ => ((i, j + 1), (i + 1, j), (i, j), (i + 1, j + 1)),
                };
                vec![(e0, 0.375), (e1, 0.375), (o0, 0.125), (o1, 0.125)]
            }
        };
        // centre child corners (1,0),(1,1),(0,1) in fine lattice; its lattice
        // is spanned by (0,1)-(1,0) = e1' and (-1,1) = e2'
        let origin = (1, 0);
        let (e1, e2) = ((0, 1), (-1, 1));
        let mut m = SMatrix::<f64, 12, 12>::zeros();
        for (k, &(p, q)) in LATTICE.iter().enumerate() {
            let f = (origin.0 + p * e1.0 + q * e2.0, origin.1 + p * e1.1 + q * e2.1);
            for (c, w) in fine(f) {
                m[(k, idx(c).expect("centre child stencil lies in parent stencil"))] += w;
            }
        }
        m
    }

    #[test]
    fn barycentre_matches_subdivision_eigenvector() {
        // The centre child of the centre child ... contracts to the
        // barycentre, so basis values there form the dominant left
        // eigenvector of the child map, normalised to sum 1.
        let m = centre_child_map();
        let mt = DMatrix::from_iterator(12, 12, m.transpose().iter().copied());
        let mut x = DMatrix::from_element(12, 1, 1.0 / 12.0);
        for _ in 0..400 {
            x = &mt * &x;
            let s: f64 = x.iter().sum();
            x /= s;
        }
        let b = eval(1.0 / 3.0, 1.0 / 3.0);
        for k in 0..12 {
            assert!((b.values[k] - x[k]).abs() < 1e-13, "{k}: {} vs {}", b.values[k], x[k]);
        }
    }

    #[test]
    fn values_at_corner_equal_limit_mask() {
        let b = eval(0.0, 0.0);
        assert!((b.values[0] - 0.5).abs() < 1e-15);
        for k in [1, 2, 3, 9, 10, 11] {
            assert!((b.values[k] - 1.0 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reproduces_linear_functions() {
        // Box splines reproduce linear functions of the lattice position.
        for &(u, v) in &[(0.2, 0.3), (0.7, 0.1), (0.0, 1.0)] {
            let b = eval(u, v);
            let (mut x, mut y) = (0.0, 0.0);
            for (k, &(p, q)) in LATTICE.iter().enumerate() {
                x += b.values[k] * p as f64;
                y += b.values[k] * q as f64;
            }
            assert!((x - u).abs() < 1e-14 && (y - v).abs() < 1e-14);
        }
    }
}
