//! Closed, consistently oriented triangle control meshes.
//!
//! A [`ControlMesh`] carries the control net of a Loop subdivision surface:
//! vertex positions, counterclockwise faces and the adjacency needed by the
//! patch evaluator (per-vertex one-rings and per-edge face pairs). Meshes
//! are immutable once built; geometry updates produce a new mesh through
//! [`ControlMesh::with_positions`].

mod obj;
pub(crate) mod topology;

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use topology::{stencil_from_rings, HalfEdges};

pub use obj::{load_obj, read_obj, save_obj, write_obj};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone)]
pub struct ControlMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    rings: Vec<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    edge_faces: Vec<[usize; 2]>,
    edge_index: HashMap<(usize, usize), usize>,
    half_edges: HalfEdges,
}

/// Ordered control-vertex stencil of one patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchStencil {
    pub face: usize,
    /// Corners in face order, then the outer ring counterclockwise starting
    /// at the vertex across the edge from corner 0 to corner 1.
    pub vertices: Vec<usize>,
    pub valences: [usize; 3],
    pub regular: bool,
}

impl PatchStencil {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Loop's vertex weight for valence `n`.
pub fn loop_beta(n: usize) -> f64 {
    let n = n as f64;
    let c = 3.0 / 8.0 + 0.25 * (2.0 * PI / n).cos();
    (5.0 / 8.0 - c * c) / n
}

impl ControlMesh {
    /// Build and validate a closed, oriented, manifold triangle mesh.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self::topology_only(vertices, faces)?;
        mesh.check_geometry()?;
        Ok(mesh)
    }

    /// Build from plain arrays.
    pub fn from_arrays(vertices: &[[f64; 3]], faces: &[[usize; 3]]) -> Result<Self> {
        Self::new(
            vertices.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
            faces.to_vec(),
        )
    }

    fn topology_only(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if nv < 4 {
            return Err(Error::TooFewVertices(nv));
        }
        for (f, t) in faces.iter().enumerate() {
            for &i in t {
                if i >= nv {
                    return Err(Error::IndexOutOfRange { face: f, index: i, count: nv });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::DegenerateFace(f));
            }
        }

        let mut edges = Vec::with_capacity(faces.len() * 3 / 2);
        let mut edge_index = HashMap::with_capacity(faces.len() * 3 / 2);
        // (face, a, b) for each traversal of the undirected edge
        let mut uses: Vec<Vec<(usize, usize, usize)>> = Vec::new();
        for (f, t) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = edge_key(a, b);
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    uses.push(Vec::with_capacity(2));
                    edges.len() - 1
                });
                uses[e].push((f, a, b));
            }
        }
        let mut edge_faces = Vec::with_capacity(edges.len());
        for (e, u) in uses.iter().enumerate() {
            let [a, b] = edges[e];
            if u.len() != 2 {
                return Err(Error::NonManifoldEdge { a, b, count: u.len() });
            }
            if u[0].1 == u[1].1 {
                return Err(Error::InconsistentOrientation { a, b });
            }
            edge_faces.push([u[0].0, u[1].0]);
        }

        let half_edges = HalfEdges::new(&faces);
        let mut vertex_faces = vec![0usize; nv];
        let mut first_face = vec![usize::MAX; nv];
        for (f, t) in faces.iter().enumerate() {
            for &i in t {
                vertex_faces[i] += 1;
                if first_face[i] == usize::MAX {
                    first_face[i] = f;
                }
            }
        }
        let mut rings = Vec::with_capacity(nv);
        for v in 0..nv {
            if first_face[v] == usize::MAX {
                return Err(Error::UnreferencedVertex(v));
            }
            let t = faces[first_face[v]];
            let k = t.iter().position(|&x| x == v).unwrap();
            let start = t[(k + 1) % 3];
            let ring = half_edges
                .ring_from(&faces, v, start)
                .ok_or(Error::NonManifoldVertex(v))?;
            if ring.len() != vertex_faces[v] {
                return Err(Error::NonManifoldVertex(v));
            }
            rings.push(ring);
        }

        Ok(Self { vertices, faces, rings, edges, edge_faces, edge_index, half_edges })
    }

    /// Reject faces with (numerically) zero area.
    pub fn check_geometry(&self) -> Result<()> {
        for (f, t) in self.faces.iter().enumerate() {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            let cross = (b - a).cross(&(c - a)).norm();
            let longest = (b - a)
                .norm_squared()
                .max((c - b).norm_squared())
                .max((a - c).norm_squared());
            if !cross.is_finite() || cross <= 1e-12 * longest || longest == 0.0 {
                return Err(Error::DegenerateFace(f));
            }
        }
        Ok(())
    }

    /// Same connectivity with new vertex positions. Geometry is not
    /// validated; call [`check_geometry`](Self::check_geometry) if needed.
    pub fn with_positions(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::BasisMeshMismatch {
                expected: self.vertices.len(),
                found: vertices.len(),
            });
        }
        let mut out = self.clone();
        out.vertices = vertices;
        Ok(out)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic()) / 2
    }

    pub fn valence(&self, v: usize) -> usize {
        self.rings[v].len()
    }

    /// Counterclockwise one-ring of `v` (viewed from outside).
    pub fn ring(&self, v: usize) -> &[usize] {
        &self.rings[v]
    }

    /// The two faces incident to edge `(a, b)`.
    pub fn edge_faces(&self, a: usize, b: usize) -> Option<[usize; 2]> {
        self.edge_index.get(&edge_key(a, b)).map(|&e| self.edge_faces[e])
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&edge_key(a, b)).copied()
    }

    /// Face owning the directed edge `a -> b`.
    pub fn face_of_half_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.half_edges.face(a, b)
    }

    pub fn is_extraordinary(&self, v: usize) -> bool {
        self.valence(v) != 6
    }

    pub fn patch_stencil(&self, face: usize) -> PatchStencil {
        let corners = self.faces[face];
        let vertices = stencil_from_rings(
            corners,
            &self.rings[corners[0]],
            &self.rings[corners[1]],
            &self.rings[corners[2]],
        )
        .expect("corner rings of a validated mesh contain the face neighbours");
        let valences = corners.map(|c| self.valence(c));
        PatchStencil { face, vertices, valences, regular: valences == [6, 6, 6] }
    }

    /// Faces sharing at least one vertex with `face` (excluding itself).
    pub fn vertex_neighbour_faces(&self, face: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &c in &self.faces[face] {
            for &n in &self.rings[c] {
                let f = self.half_edges.face(c, n).unwrap();
                if f != face && !out.contains(&f) {
                    out.push(f);
                }
            }
        }
        out
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let total: f64 = self
            .edges
            .iter()
            .map(|&[a, b]| (self.vertices[a] - self.vertices[b]).norm())
            .sum();
        total / self.edges.len() as f64
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|p| *p += t);
        out
    }

    /// Apply `f` to every vertex position.
    pub fn mapped(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|p| *p = f(p));
        out
    }

    /// One step of Loop subdivision. New vertex `V + e` sits on edge `e`
    /// (edge order of [`edges`](Self::edges)); face `f` becomes faces
    /// `4f..4f+4` (three corner children, then the centre child).
    pub fn loop_subdivide(&self) -> Result<Self> {
        let nv = self.num_vertices();
        let mut verts = Vec::with_capacity(nv + self.num_edges());
        for v in 0..nv {
            let ring = &self.rings[v];
            let n = ring.len();
            let beta = loop_beta(n);
            let sum: Vec3 = ring.iter().map(|&j| self.vertices[j]).sum();
            verts.push(self.vertices[v] * (1.0 - n as f64 * beta) + sum * beta);
        }
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            let [f0, f1] = self.edge_faces[e];
            let c = topology::third(&self.faces[f0], a, b);
            let d = topology::third(&self.faces[f1], a, b);
            verts.push(
                (self.vertices[a] + self.vertices[b]) * 0.375
                    + (self.vertices[c] + self.vertices[d]) * 0.125,
            );
        }
        let mid = |a: usize, b: usize| nv + self.edge_index[&edge_key(a, b)];
        let mut faces = Vec::with_capacity(self.faces.len() * 4);
        for &[a, b, c] in &self.faces {
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            faces.push([a, ab, ca]);
            faces.push([ab, b, bc]);
            faces.push([ca, bc, c]);
            faces.push([ab, bc, ca]);
        }
        Self::new(verts, faces)
    }

    /// `levels` successive Loop subdivisions.
    pub fn subdivided(&self, levels: usize) -> Result<Self> {
        let mut m = self.clone();
        for _ in 0..levels {
            m = m.loop_subdivide()?;
        }
        Ok(m)
    }

    /// Limit-surface position of every control vertex.
    pub fn limit_positions(&self) -> Vec<Vec3> {
        (0..self.num_vertices())
            .map(|v| {
                let w = self.limit_weights(v);
                w.iter().map(|&(j, c)| self.vertices[j] * c).sum()
            })
            .collect()
    }

    /// SHA-256 of the OBJ serialisation (hex).
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(write_obj(self).as_bytes()))
    }

    /// Loop limit mask at `v` as (vertex, weight) pairs.
    pub fn limit_weights(&self, v: usize) -> Vec<(usize, f64)> {
        let ring = &self.rings[v];
        let n = ring.len();
        let chi = 1.0 / (n as f64 + 3.0 / (8.0 * loop_beta(n)));
        let mut w = Vec::with_capacity(n + 1);
        w.push((v, 1.0 - n as f64 * chi));
        w.extend(ring.iter().map(|&j| (j, chi)));
        w
    }

    /// Control points whose limit surface passes through `targets` at the
    /// vertex limit points (Jacobi iteration on the limit-mask system).
    pub fn fit_limit_positions(&self, targets: &[Vec3]) -> Result<Self> {
        if targets.len() != self.num_vertices() {
            return Err(Error::BasisMeshMismatch {
                expected: self.num_vertices(),
                found: targets.len(),
            });
        }
        let scale = self.bounding_box_diagonal().max(1e-300);
        let mut c: Vec<Vec3> = targets.to_vec();
        let weights: Vec<_> = (0..self.num_vertices()).map(|v| self.limit_weights(v)).collect();
        for _ in 0..500 {
            let mut max_res = 0.0f64;
            let next: Vec<Vec3> = (0..c.len())
                .map(|v| {
                    let lim: Vec3 = weights[v].iter().map(|&(j, w)| c[j] * w).sum();
                    let r = targets[v] - lim;
                    max_res = max_res.max(r.norm());
                    c[v] + r
                })
                .collect();
            c = next;
            if max_res < 1e-14 * scale {
                break;
            }
        }
        self.with_positions(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn tetrahedron_is_valid() {
        let m = shapes::tetrahedron();
        assert_eq!(m.num_vertices(), 4);
        assert!((0..4).all(|v| m.valence(v) == 3));
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn icosahedron_counts() {
        let m = shapes::icosahedron();
        assert_eq!(m.num_faces(), 20);
        assert_eq!(m.num_edges(), 30);
        assert!((0..12).all(|v| m.valence(v) == 5));
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn open_strip_is_rejected() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        let err = ControlMesh::new(v, vec![[0, 1, 2], [2, 1, 3]]).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge { count: 1, .. }), "{err}");
    }

    #[test]
    fn flipped_face_is_rejected() {
        let m = shapes::tetrahedron();
        let mut faces = m.faces().to_vec();
        faces[0].swap(1, 2);
        let err = ControlMesh::new(m.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation { .. }), "{err}");
    }

    #[test]
    fn repeated_index_and_zero_area_are_degenerate() {
        let m = shapes::tetrahedron();
        let mut faces = m.faces().to_vec();
        faces[0][1] = faces[0][0];
        assert!(matches!(
            ControlMesh::new(m.vertices().to_vec(), faces),
            Err(Error::DegenerateFace(0))
        ));
        let mut v = m.vertices().to_vec();
        let f = m.faces()[0];
        v[f[2]] = (v[f[0]] + v[f[1]]) * 0.5;
        assert!(matches!(ControlMesh::new(v, m.faces().to_vec()), Err(Error::DegenerateFace(_))));
    }

    #[test]
    fn out_of_range_and_too_few() {
        let m = shapes::tetrahedron();
        let mut faces = m.faces().to_vec();
        faces[2][0] = 9;
        assert!(matches!(
            ControlMesh::new(m.vertices().to_vec(), faces),
            Err(Error::IndexOutOfRange { index: 9, .. })
        ));
        assert!(matches!(
            ControlMesh::new(m.vertices()[..3].to_vec(), vec![[0, 1, 2]]),
            Err(Error::TooFewVertices(3))
        ));
    }

    #[test]
    fn subdivision_counts_and_valences() {
        let m = shapes::icosahedron();
        let s = m.loop_subdivide().unwrap();
        assert_eq!(s.num_vertices(), 42);
        assert_eq!(s.num_faces(), 80);
        assert_eq!(s.euler_characteristic(), 2);
        assert!((12..42).all(|v| s.valence(v) == 6));
    }

    #[test]
    fn regular_weights_reduce_to_published_masks() {
        assert!((loop_beta(6) - 1.0 / 16.0).abs() < 1e-15);
        assert!((loop_beta(3) - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn flat_regular_region_uses_edge_mask() {
        // Twice-subdivided icosahedron, flattened onto random heights; new
        // edge points must follow 3/8, 3/8, 1/8, 1/8 exactly.
        let m = shapes::icosahedron().subdivided(2).unwrap();
        let m = m.mapped(|p| Vec3::new(p.x, p.y, 0.3 * p.x * p.y + p.z));
        let s = m.loop_subdivide().unwrap();
        let nv = m.num_vertices();
        for (e, &[a, b]) in m.edges().iter().enumerate() {
            let [f0, f1] = m.edge_faces(a, b).unwrap();
            let c = topology::third(&m.faces()[f0], a, b);
            let d = topology::third(&m.faces()[f1], a, b);
            let p = m.vertices();
            let expect = 0.375 * p[a] + 0.375 * p[b] + 0.125 * p[c] + 0.125 * p[d];
            assert!((s.vertices()[nv + e] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn stencil_sizes() {
        let ico = shapes::icosahedron();
        let st = ico.patch_stencil(0);
        assert!(!st.regular);
        assert_eq!(st.len(), 9);

        let m = ico.subdivided(2).unwrap();
        let regular = (0..m.num_faces())
            .map(|f| m.patch_stencil(f))
            .find(|s| s.valences == [6, 6, 6])
            .unwrap();
        assert!(regular.regular);
        assert_eq!(regular.len(), 12);
        assert_eq!(m.patch_stencil(regular.face), regular);
    }

    #[test]
    fn stencil_with_valence_seven_corner() {
        // Flip one edge of a regular region: two corners go to 7, two to 5.
        let m = shapes::icosahedron().subdivided(2).unwrap();
        let (a, b) = m
            .edges()
            .iter()
            .map(|e| (e[0], e[1]))
            .find(|&(a, b)| {
                let [f0, f1] = m.edge_faces(a, b).unwrap();
                let c = topology::third(&m.faces()[f0], a, b);
                let d = topology::third(&m.faces()[f1], a, b);
                [a, b, c, d].iter().all(|&x| m.valence(x) == 6)
                    && m.ring(c).iter().chain(m.ring(d)).all(|&x| m.valence(x) == 6)
                    && m.ring(a).iter().chain(m.ring(b)).all(|&x| m.valence(x) == 6)
            })
            .unwrap();
        let [f0, f1] = m.edge_faces(a, b).unwrap();
        let (fa, fb) = if m.faces()[f0].windows(2).any(|w| w == [a, b])
            || (m.faces()[f0][2] == a && m.faces()[f0][0] == b)
        {
            (f0, f1)
        } else {
            (f1, f0)
        };
        let c = topology::third(&m.faces()[fa], a, b);
        let d = topology::third(&m.faces()[fb], a, b);
        let mut faces = m.faces().to_vec();
        // fa = (a, b, c), fb = (b, a, d) -> (c, d, b), (d, c, a)
        faces[fa] = [c, d, b];
        faces[fb] = [d, c, a];
        let flipped = ControlMesh::new(m.vertices().to_vec(), faces).unwrap();
        assert_eq!(flipped.valence(c), 7);
        assert_eq!(flipped.valence(a), 5);
        // a face with valences (6, 6, 7): c plus a regular neighbour pair
        let target = (0..flipped.num_faces())
            .map(|f| flipped.patch_stencil(f))
            .find(|s| {
                let mut v = s.valences;
                v.sort();
                v == [6, 6, 7]
            })
            .unwrap();
        assert_eq!(target.len(), 13);
    }
}
