//! Irregular-patch evaluation by repeated local subdivision.
//!
//! A patch is refined around its corners until the query point falls in a
//! child patch whose corners all have valence 6. Every locally refined
//! vertex is stored as an affine combination of the root stencil, so the
//! tree depends on connectivity only and can be shared across geometries.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::boxspline;
use crate::mesh::topology::{regular_stencil, third, HalfEdges};
use crate::mesh::{loop_beta, ControlMesh};

pub const MAX_DEPTH: usize = 20;

/// Local triangle set with vertex weights over the root stencil.
#[derive(Debug, Clone)]
pub(crate) struct Region {
    faces: Vec<[usize; 3]>,
    /// `weights[(i, k)]`: weight of root stencil vertex `k` in local vertex `i`.
    weights: DMatrix<f64>,
    patch: [usize; 3],
}

#[derive(Debug)]
pub(crate) enum Node {
    /// 12 × K weights of the child's regular stencil.
    Regular(DMatrix<f64>),
    Irregular { region: Region, depth: usize, children: OnceLock<Box<[Node; 4]>> },
}

/// Child index and local coordinates of `(u, v)`, with the linear part of
/// the parameter map.
pub(crate) fn descend(u: f64, v: f64) -> (usize, f64, f64, [[f64; 2]; 2]) {
    if u >= 0.5 {
        (1, 2.0 * u - 1.0, 2.0 * v, [[2.0, 0.0], [0.0, 2.0]])
    } else if v >= 0.5 {
        (2, 2.0 * u, 2.0 * v - 1.0, [[2.0, 0.0], [0.0, 2.0]])
    } else if u + v <= 0.5 {
        (0, 2.0 * u, 2.0 * v, [[2.0, 0.0], [0.0, 2.0]])
    } else {
        (3, 2.0 * u + 2.0 * v - 1.0, 1.0 - 2.0 * u, [[2.0, 2.0], [-2.0, 0.0]])
    }
}

impl Node {
    /// Root node of a face, given the face's ordered stencil.
    pub(crate) fn root(mesh: &ControlMesh, face: usize, stencil: &[usize], regular: bool) -> Self {
        let k = stencil.len();
        let corners = mesh.faces()[face];
        if regular {
            let pos = regular_stencil(corners, mesh.ring(corners[0]), mesh.ring(corners[1]), mesh.ring(corners[2]))
                .expect("regular corners have valence 6");
            let mut w = DMatrix::zeros(12, k);
            for (r, v) in pos.iter().enumerate() {
                w[(r, stencil.iter().position(|x| x == v).unwrap())] = 1.0;
            }
            return Node::Regular(w);
        }
        let mut local_faces = Vec::new();
        for &c in &corners {
            for &n in mesh.ring(c) {
                let f = mesh.face_of_half_edge(c, n).expect("closed mesh");
                if !local_faces.contains(&f) {
                    local_faces.push(f);
                }
            }
        }
        let pos: HashMap<usize, usize> = stencil.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let faces: Vec<[usize; 3]> = local_faces
            .iter()
            .map(|&f| mesh.faces()[f].map(|v| pos[&v]))
            .collect();
        let region = Region {
            faces,
            weights: DMatrix::identity(k, k),
            patch: corners.map(|v| pos[&v]),
        };
        Node::Irregular { region, depth: 0, children: OnceLock::new() }
    }

    fn children(&self) -> &[Node; 4] {
        match self {
            Node::Irregular { region, depth, children } => {
                children.get_or_init(|| Box::new(region.refine(*depth + 1)))
            }
            Node::Regular(_) => unreachable!("regular nodes are leaves"),
        }
    }

    /// Basis values and root-parameter derivatives at `(u, v)`.
    pub(crate) fn eval(&self, u: f64, v: f64, values: &mut [f64], du: &mut [f64], dv: &mut [f64]) {
        let mut node = self;
        let (mut u, mut v) = (u, v);
        // maps root parameter increments to current-level increments
        let mut jac = [[1.0, 0.0], [0.0, 1.0]];
        loop {
            match node {
                Node::Regular(w) => {
                    let b = boxspline::eval(u, v);
                    return combine(w, &b, &jac, values, du, dv);
                }
                Node::Irregular { depth, .. } => {
                    let ch = node.children();
                    let mut step = descend(u, v);
                    if *depth + 1 >= MAX_DEPTH && matches!(ch[step.0], Node::Irregular { .. }) {
                        let (su, sv) = snap_to_centre(u, v);
                        step = descend(su, sv);
                    }
                    let (c, nu, nv, m) = step;
                    jac = matmul(m, jac);
                    node = &ch[c];
                    u = nu;
                    v = nv;
                }
            }
        }
    }
}

/// Nearest point of the centre child `u >= 0, v >= 0` (below 1/2) with `u + v >= 1/2`.
fn snap_to_centre(u: f64, v: f64) -> (f64, f64) {
    let u = u.clamp(0.0, 0.5 - 1e-15);
    let v = v.clamp(0.0, 0.5 - 1e-15);
    let s = u + v;
    if s >= 0.5 + 1e-15 {
        (u, v)
    } else {
        let d = (0.5 + 1e-15 - s) / 2.0;
        (u + d, v + d)
    }
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn combine(
    w: &DMatrix<f64>,
    b: &boxspline::RegularBasis,
    jac: &[[f64; 2]; 2],
    values: &mut [f64],
    du: &mut [f64],
    dv: &mut [f64],
) {
    let k = w.ncols();
    values[..k].fill(0.0);
    du[..k].fill(0.0);
    dv[..k].fill(0.0);
    for r in 0..12 {
        // root derivative = J^T (local derivative)
        let gu = jac[0][0] * b.du[r] + jac[1][0] * b.dv[r];
        let gv = jac[0][1] * b.du[r] + jac[1][1] * b.dv[r];
        for c in 0..k {
            let x = w[(r, c)];
            if x != 0.0 {
                values[c] += x * b.values[r];
                du[c] += x * gu;
                dv[c] += x * gv;
            }
        }
    }
}

impl Region {
    /// One Loop step restricted to the region, returning the four children
    /// of the patch triangle.
    fn refine(&self, depth: usize) -> [Node; 4] {
        let he = HalfEdges::new(&self.faces);
        let k = self.weights.ncols();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let row = |i: usize| self.weights.row(i).iter().copied().collect::<Vec<f64>>();

        let mut vertex_id: HashMap<usize, usize> = HashMap::new();
        for &c in &self.patch {
            let start = self
                .faces
                .iter()
                .find_map(|t| t.iter().position(|&x| x == c).map(|p| t[(p + 1) % 3]))
                .expect("corner is in the region");
            let ring = he.ring_from(&self.faces, c, start).expect("corner fan is closed");
            let n = ring.len();
            let beta = loop_beta(n);
            let mut r: Vec<f64> = row(c).iter().map(|x| x * (1.0 - n as f64 * beta)).collect();
            for &j in &ring {
                for (a, b) in r.iter_mut().zip(row(j)) {
                    *a += beta * b;
                }
            }
            vertex_id.insert(c, rows.len());
            rows.push(r);
        }

        let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.faces {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if edge_id.contains_key(&key) {
                    continue;
                }
                let (Some(f0), Some(f1)) = (he.face(a, b), he.face(b, a)) else { continue };
                let c = third(&self.faces[f0], a, b);
                let d = third(&self.faces[f1], a, b);
                let (ra, rb, rc, rd) = (row(a), row(b), row(c), row(d));
                let r = (0..k).map(|i| 0.375 * (ra[i] + rb[i]) + 0.125 * (rc[i] + rd[i])).collect();
                edge_id.insert(key, rows.len());
                rows.push(r);
            }
        }

        let mid = |a: usize, b: usize| edge_id.get(&(a.min(b), a.max(b))).copied();
        let children_of = |t: &[usize; 3]| -> [Option<[usize; 3]>; 4] {
            let [a, b, c] = *t;
            let (va, vb, vc) = (vertex_id.get(&a).copied(), vertex_id.get(&b).copied(), vertex_id.get(&c).copied());
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            let tri = |x: Option<usize>, y: Option<usize>, z: Option<usize>| Some([x?, y?, z?]);
            [tri(va, ab, ca), tri(ab, vb, bc), tri(ca, bc, vc), tri(ab, bc, ca)]
        };
        let mut fine_faces = Vec::new();
        for t in &self.faces {
            fine_faces.extend(children_of(t).into_iter().flatten());
        }
        let patch_children = children_of(&self.patch).map(|c| c.expect("patch children are computable"));
        let fine_he = HalfEdges::new(&fine_faces);

        patch_children.map(|corners| {
            let rings: Vec<Vec<usize>> = corners
                .iter()
                .map(|&c| {
                    let start = fine_faces
                        .iter()
                        .find_map(|t| t.iter().position(|&x| x == c).map(|p| t[(p + 1) % 3]))
                        .unwrap();
                    fine_he.ring_from(&fine_faces, c, start).expect("child corner fan is closed")
                })
                .collect();
            if rings.iter().all(|r| r.len() == 6) {
                let st = regular_stencil(corners, &rings[0], &rings[1], &rings[2]).unwrap();
                let w = DMatrix::from_fn(12, k, |i, j| rows[st[i]][j]);
                return Node::Regular(w);
            }
            // keep the faces around the child's corners
            let sub: Vec<[usize; 3]> = fine_faces
                .iter()
                .filter(|t| t.iter().any(|x| corners.contains(x)))
                .copied()
                .collect();
            let mut remap: HashMap<usize, usize> = HashMap::new();
            let mut order = Vec::new();
            for t in &sub {
                for &x in t {
                    remap.entry(x).or_insert_with(|| {
                        order.push(x);
                        order.len() - 1
                    });
                }
            }
            let faces = sub.iter().map(|t| t.map(|x| remap[&x])).collect();
            let weights = DMatrix::from_fn(order.len(), k, |i, j| rows[order[i]][j]);
            Node::Irregular {
                region: Region { faces, weights, patch: corners.map(|x| remap[&x]) },
                depth,
                children: OnceLock::new(),
            }
        })
    }
}
