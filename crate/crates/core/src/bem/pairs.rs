//! Point sets, pair classification and local interaction blocks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{ControlMesh, Vec3};
use crate::subdivision::{gauss_legendre, split4, BarycentricPoint, SurfaceBasis, TriangleQuadrature};

type Tri = [[f64; 2]; 3];

const CORNERS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
const REFERENCE: Tri = CORNERS;

/// Quadrature points of one patch with geometry and weighted basis values.
#[derive(Debug, Clone)]
pub(crate) struct PointSet {
    pub pos: Vec<Vec3>,
    pub normal: Vec<Vec3>,
    /// Quadrature weight times area element.
    pub wj: Vec<f64>,
    /// `wj · ψ_i` at each point, points × stencil.
    pub wpsi: DMatrix<f64>,
}

impl PointSet {
    pub fn new(basis: &SurfaceBasis, positions: &[Vec3], face: usize, rule: &TriangleQuadrature) -> Result<Self> {
        let pts: Vec<([f64; 2], f64)> = rule.iter().collect();
        Self::from_points(basis, positions, face, &pts)
    }

    pub fn from_points(basis: &SurfaceBasis, positions: &[Vec3], face: usize, pts: &[([f64; 2], f64)]) -> Result<Self> {
        let k = basis.stencil(face).len();
        let n = pts.len();
        let mut out = Self {
            pos: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            wj: Vec::with_capacity(n),
            wpsi: DMatrix::zeros(n, k),
        };
        for (q, (p, w)) in pts.iter().enumerate() {
            let s = basis.sample(face, BarycentricPoint::new(p[0], p[1])?);
            let sp = basis.point(face, &s, positions)?;
            let wj = w * sp.jacobian;
            if !wj.is_finite() {
                return Err(Error::QuadratureBreakdown { face, msg: "non-finite quadrature weight".into() });
            }
            out.pos.push(sp.position);
            out.normal.push(sp.normal);
            out.wj.push(wj);
            for i in 0..k {
                out.wpsi[(q, i)] = wj * s.values[i];
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    /// `∫ ψ_i ψ_j` over the patch.
    pub fn mass(&self) -> DMatrix<f64> {
        let k = self.wpsi.ncols();
        let mut m = DMatrix::zeros(k, k);
        for q in 0..self.len() {
            let w = self.wj[q];
            if w == 0.0 {
                continue;
            }
            for i in 0..k {
                let a = self.wpsi[(q, i)];
                for j in 0..k {
                    m[(i, j)] += a * self.wpsi[(q, j)] / w;
                }
            }
        }
        m
    }
}

/// Coefficients of the combined operator `s·G + d·∂G/∂n_test`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    pub kappa: f64,
    pub s: Complex64,
    pub d: Complex64,
}

impl Kernel {
    /// `(G, ∂G/∂R)` at distance `r`.
    #[inline]
    fn green(&self, r: f64) -> (Complex64, Complex64) {
        let g = Complex64::from_polar(1.0 / (4.0 * PI * r), -self.kappa * r);
        (g, g * Complex64::new(-1.0 / r, -self.kappa))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PairKind {
    Far,
    Near,
    /// Shared vertex: local corner index in each face.
    Vertex(usize, usize),
    /// Shared edge: local edge index (corners `e`, `e+1`) in each face.
    Edge(usize, usize),
}

fn edge_index(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, 1) => 0,
        (1, 2) => 1,
        _ => 2,
    }
}

/// For each face, the non-far partners `g > f` sorted by index.
pub(crate) fn classify(mesh: &ControlMesh) -> Vec<Vec<(usize, PairKind)>> {
    let faces = mesh.faces();
    let mut vf: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_vertices()];
    for (f, t) in faces.iter().enumerate() {
        for &v in t {
            vf[v].push(f);
        }
    }
    (0..faces.len())
        .map(|f| {
            let mut near: BTreeMap<usize, PairKind> = BTreeMap::new();
            for &v in &faces[f] {
                for &h in &vf[v] {
                    for &w in &faces[h] {
                        for &g in &vf[w] {
                            if g > f {
                                near.entry(g).or_insert(PairKind::Near);
                            }
                        }
                    }
                }
            }
            for (g, kind) in near.iter_mut() {
                let shared: Vec<(usize, usize)> = (0..3)
                    .flat_map(|i| (0..3).map(move |j| (i, j)))
                    .filter(|&(i, j)| faces[f][i] == faces[*g][j])
                    .collect();
                *kind = match shared.as_slice() {
                    [] => PairKind::Near,
                    [(i, j)] => PairKind::Vertex(*i, *j),
                    [(i0, j0), (i1, j1)] => PairKind::Edge(edge_index(*i0, *i1), edge_index(*j0, *j1)),
                    _ => PairKind::Near,
                };
            }
            near.into_iter().collect()
        })
        .collect()
}

fn same(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
    let (px, py) = (p[0] - a[0], p[1] - a[1]);
    let cross = ex * py - ey * px;
    let t = (px * ex + py * ey) / (ex * ex + ey * ey);
    cross.abs() < 1e-12 && (-1e-12..=1.0 + 1e-12).contains(&t)
}

/// Split sub-triangles selected by `singular` `depth` times.
fn graded(rule: &TriangleQuadrature, depth: usize, singular: impl Fn(&Tri) -> bool) -> TriangleQuadrature {
    let mut done = Vec::new();
    let mut active = vec![REFERENCE];
    for _ in 0..depth {
        let mut next = Vec::new();
        for t in active {
            for c in split4(t) {
                if singular(&c) {
                    next.push(c);
                } else {
                    done.push(c);
                }
            }
        }
        active = next;
    }
    done.extend(active);
    rule.concat(&done)
}

/// Rule graded toward corner `c` of the reference triangle.
pub(crate) fn graded_toward_vertex(rule: &TriangleQuadrature, c: usize, depth: usize) -> TriangleQuadrature {
    graded(rule, depth, |t| t.iter().any(|p| same(*p, CORNERS[c])))
}

/// Rule graded toward the edge from corner `e` to corner `e+1`.
pub(crate) fn graded_toward_edge(rule: &TriangleQuadrature, e: usize, depth: usize) -> TriangleQuadrature {
    let (a, b) = (CORNERS[e], CORNERS[(e + 1) % 3]);
    graded(rule, depth, |t| t.iter().filter(|p| on_segment(**p, a, b)).count() >= 2)
}

/// Interaction blocks between point sets `a` and `b`: (test `a`, source
/// `b`) and (test `b`, source `a`).
pub(crate) fn pair_blocks(a: &PointSet, b: &PointSet, kern: &Kernel) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let (na, nb) = (a.len(), b.len());
    let symmetric = kern.d == Complex64::new(0.0, 0.0);
    let mut re1 = DMatrix::zeros(na, nb);
    let mut im1 = DMatrix::zeros(na, nb);
    let (mut re2, mut im2) = if symmetric {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
    } else {
        (DMatrix::zeros(na, nb), DMatrix::zeros(na, nb))
    };
    for p in 0..nb {
        let y = &b.pos[p];
        let ny = &b.normal[p];
        for q in 0..na {
            let d = a.pos[q] - y;
            let r = d.norm();
            let (g, dg) = kern.green(r);
            let sg = kern.s * g;
            if symmetric {
                re1[(q, p)] = sg.re;
                im1[(q, p)] = sg.im;
            } else {
                let kd = kern.d * dg / r;
                let v1 = sg + kd * a.normal[q].dot(&d);
                let v2 = sg - kd * ny.dot(&d);
                re1[(q, p)] = v1.re;
                im1[(q, p)] = v1.im;
                re2[(q, p)] = v2.re;
                im2[(q, p)] = v2.im;
            }
        }
    }
    let project = |re: &DMatrix<f64>, im: &DMatrix<f64>| {
        let r = a.wpsi.tr_mul(&(re * &b.wpsi));
        let i = a.wpsi.tr_mul(&(im * &b.wpsi));
        r.zip_map(&i, Complex64::new)
    };
    let fg = project(&re1, &im1);
    let gf = if symmetric { fg.transpose() } else { project(&re2, &im2).transpose() };
    (fg, gf)
}

/// Self-interaction of a patch: for each outer point, the inner integral
/// uses a Duffy-type rule on the three sub-triangles with apex at that
/// point, which removes the `1/R` singularity.
pub(crate) fn coincident_block(
    basis: &SurfaceBasis,
    positions: &[Vec3],
    face: usize,
    outer: &PointSet,
    outer_rule: &TriangleQuadrature,
    order: usize,
    kern: &Kernel,
) -> Result<DMatrix<Complex64>> {
    let (gx, gw) = gauss_legendre(order);
    let k = outer.wpsi.ncols();
    let zero = Complex64::new(0.0, 0.0);
    let mut s = DMatrix::from_element(k, k, zero);
    let mut d = DMatrix::from_element(k, k, zero);
    let mut inner = Vec::with_capacity(3 * order * order);
    for (q, (p0, _)) in outer_rule.iter().enumerate() {
        inner.clear();
        for e in 0..3 {
            let (c1, c2) = (CORNERS[e], CORNERS[(e + 1) % 3]);
            let e1 = [c1[0] - p0[0], c1[1] - p0[1]];
            let e2 = [c2[0] - p0[0], c2[1] - p0[1]];
            let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
            if det < 1e-14 {
                continue;
            }
            for (xi, wx) in gx.iter().zip(&gw) {
                for (eta, we) in gx.iter().zip(&gw) {
                    let dir = [(1.0 - eta) * e1[0] + eta * e2[0], (1.0 - eta) * e1[1] + eta * e2[1]];
                    let p = [p0[0] + xi * dir[0], p0[1] + xi * dir[1]];
                    inner.push(([p[0].max(0.0), p[1].max(0.0)], wx * we * xi * det));
                }
            }
        }
        let set = PointSet::from_points(basis, positions, face, &inner)?;
        let x = &outer.pos[q];
        let n = &outer.normal[q];
        let mut row_s = vec![zero; k];
        let mut row_d = vec![zero; k];
        for pi in 0..set.len() {
            let dv = x - set.pos[pi];
            let r = dv.norm();
            let (g, dg) = kern.green(r);
            let dk = dg * (n.dot(&dv) / r);
            for j in 0..k {
                let w = set.wpsi[(pi, j)];
                row_s[j] += g * w;
                row_d[j] += dk * w;
            }
        }
        for i in 0..k {
            let wi = outer.wpsi[(q, i)];
            if wi == 0.0 {
                continue;
            }
            for j in 0..k {
                s[(i, j)] += row_s[j] * wi;
                d[(i, j)] += row_d[j] * wi;
            }
        }
    }
    let s_sym = (&s + s.transpose()) * Complex64::new(0.5, 0.0);
    Ok(s_sym * kern.s + d * kern.d)
}
