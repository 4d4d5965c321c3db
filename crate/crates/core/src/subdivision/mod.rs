//! Loop limit-surface evaluation.
//!
//! [`SurfaceBasis`] caches per-face stencils and local refinement trees.
//! It depends on mesh connectivity only; positions enter through
//! [`SurfaceBasis::frame`], so the same basis serves every geometry
//! sharing a connectivity.

pub mod boxspline;
mod patch;
pub mod quadrature;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::mesh::{ControlMesh, Vec3};
use patch::Node;
pub use quadrature::{gauss_legendre, split4, TriangleQuadrature};

pub use patch::MAX_DEPTH;

/// Tolerance for accepting parameters slightly outside the reference triangle.
const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricPoint {
    pub u: f64,
    pub v: f64,
}

impl BarycentricPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(u >= -DOMAIN_TOL && v >= -DOMAIN_TOL && u + v <= 1.0 + DOMAIN_TOL) {
            return Err(Error::Domain { u, v });
        }
        Ok(Self { u: u.max(0.0), v: v.max(0.0) })
    }

    pub fn w(&self) -> f64 {
        1.0 - self.u - self.v
    }
}

/// The 12 regular box-spline values and parametric derivatives.
pub fn eval_regular_basis(p: BarycentricPoint) -> boxspline::RegularBasis {
    boxspline::eval(p.u, p.v)
}

/// Basis functions of one patch at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSample {
    pub values: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

impl BasisSample {
    fn zeros(k: usize) -> Self {
        Self { values: vec![0.0; k], du: vec![0.0; k], dv: vec![0.0; k] }
    }
}

/// Basis sample combined with geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub position: Vec3,
    pub r_u: Vec3,
    pub r_v: Vec3,
    /// Unit outward normal.
    pub normal: Vec3,
    /// Area element |r_u × r_v|.
    pub jacobian: f64,
    pub values: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub surface_gradients: Vec<Vec3>,
}

/// Limit-surface geometry at a point (no per-basis data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    pub normal: Vec3,
    pub jacobian: f64,
}

#[derive(Debug)]
struct PatchEntry {
    stencil: Vec<usize>,
    node: Node,
}

/// Connectivity-only evaluator of all patches of a control mesh.
#[derive(Debug)]
pub struct SurfaceBasis {
    num_vertices: usize,
    faces: Vec<[usize; 3]>,
    patches: Vec<PatchEntry>,
}

impl SurfaceBasis {
    pub fn new(mesh: &ControlMesh) -> Self {
        let patches = (0..mesh.num_faces())
            .map(|f| {
                let st = mesh.patch_stencil(f);
                let node = Node::root(mesh, f, &st.vertices, st.regular);
                PatchEntry { stencil: st.vertices, node }
            })
            .collect();
        Self { num_vertices: mesh.num_vertices(), faces: mesh.faces().to_vec(), patches }
    }

    pub fn num_faces(&self) -> usize {
        self.patches.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn stencil(&self, face: usize) -> &[usize] {
        &self.patches[face].stencil
    }

    /// Whether `mesh` has the connectivity this basis was built from.
    pub fn matches(&self, mesh: &ControlMesh) -> bool {
        mesh.num_vertices() == self.num_vertices && mesh.faces() == self.faces.as_slice()
    }

    fn check(&self, mesh: &ControlMesh) -> Result<()> {
        if self.matches(mesh) {
            Ok(())
        } else {
            Err(Error::BasisMeshMismatch { expected: self.num_vertices, found: mesh.num_vertices() })
        }
    }

    /// Basis values and parametric derivatives over the face stencil.
    pub fn sample(&self, face: usize, p: BarycentricPoint) -> BasisSample {
        let e = &self.patches[face];
        let mut s = BasisSample::zeros(e.stencil.len());
        e.node.eval(p.u, p.v, &mut s.values, &mut s.du, &mut s.dv);
        s
    }

    /// Limit position and tangents from a basis sample.
    pub fn tangents(&self, face: usize, s: &BasisSample, positions: &[Vec3]) -> (Vec3, Vec3, Vec3) {
        let mut r = Vec3::zeros();
        let mut ru = Vec3::zeros();
        let mut rv = Vec3::zeros();
        for (i, &vid) in self.patches[face].stencil.iter().enumerate() {
            let c = positions[vid];
            r += c * s.values[i];
            ru += c * s.du[i];
            rv += c * s.dv[i];
        }
        (r, ru, rv)
    }

    /// Geometry of the limit surface at a point.
    pub fn point(&self, face: usize, s: &BasisSample, positions: &[Vec3]) -> Result<SurfacePoint> {
        let (position, ru, rv) = self.tangents(face, s, positions);
        let cross = ru.cross(&rv);
        let jacobian = cross.norm();
        if !(jacobian > 1e-14 * ru.norm().max(rv.norm()).powi(2)) || !jacobian.is_finite() {
            return Err(Error::SingularFrame { face, jacobian });
        }
        Ok(SurfacePoint { position, normal: cross / jacobian, jacobian })
    }

    /// Full evaluation with frame and surface gradients.
    pub fn frame(&self, face: usize, s: BasisSample, positions: &[Vec3]) -> Result<BasisEval> {
        let (position, r_u, r_v) = self.tangents(face, &s, positions);
        let cross = r_u.cross(&r_v);
        let jacobian = cross.norm();
        if !(jacobian > 1e-14 * r_u.norm().max(r_v.norm()).powi(2)) || !jacobian.is_finite() {
            return Err(Error::SingularFrame { face, jacobian });
        }
        let g = Matrix2::new(r_u.dot(&r_u), r_u.dot(&r_v), r_v.dot(&r_u), r_v.dot(&r_v));
        let gi = g.try_inverse().ok_or(Error::SingularFrame { face, jacobian })?;
        let surface_gradients = s
            .du
            .iter()
            .zip(&s.dv)
            .map(|(&a, &b)| r_u * (gi[(0, 0)] * a + gi[(0, 1)] * b) + r_v * (gi[(1, 0)] * a + gi[(1, 1)] * b))
            .collect();
        Ok(BasisEval {
            position,
            r_u,
            r_v,
            normal: cross / jacobian,
            jacobian,
            values: s.values,
            du: s.du,
            dv: s.dv,
            surface_gradients,
        })
    }

    /// Evaluate basis and frame of `face` at `p` on `mesh`.
    pub fn eval(&self, mesh: &ControlMesh, face: usize, p: BarycentricPoint) -> Result<BasisEval> {
        self.check(mesh)?;
        self.frame(face, self.sample(face, p), mesh.vertices())
    }

    /// Limit-surface area by quadrature.
    pub fn area(&self, mesh: &ControlMesh, quad: &TriangleQuadrature) -> Result<f64> {
        self.check(mesh)?;
        let mut total = 0.0;
        for f in 0..self.num_faces() {
            for (p, w) in quad.iter() {
                let s = self.sample(f, BarycentricPoint { u: p[0], v: p[1] });
                total += w * self.point(f, &s, mesh.vertices())?.jacobian;
            }
        }
        Ok(total)
    }
}

/// Evaluate one patch without keeping a basis cache.
pub fn eval_patch(mesh: &ControlMesh, face: usize, p: BarycentricPoint) -> Result<BasisEval> {
    if face >= mesh.num_faces() {
        return Err(Error::Validation(format!("face {face} out of range")));
    }
    let st = mesh.patch_stencil(face);
    let entry = PatchEntry { node: Node::root(mesh, face, &st.vertices, st.regular), stencil: st.vertices };
    let basis = SurfaceBasis { num_vertices: mesh.num_vertices(), faces: Vec::new(), patches: vec![entry] };
    basis.frame(0, basis.sample(0, p), mesh.vertices())
}

/// Limit-surface area with the default degree-4 rule.
pub fn limit_area(mesh: &ControlMesh) -> Result<f64> {
    SurfaceBasis::new(mesh).area(mesh, &TriangleQuadrature::new(4)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn domain_error() {
        assert!(matches!(BarycentricPoint::new(0.7, 0.4), Err(Error::Domain { .. })));
        assert!(BarycentricPoint::new(-1e-14, 1.0).is_ok());
    }

    #[test]
    fn irregular_partition_of_unity() {
        let m = shapes::icosahedron();
        let b = SurfaceBasis::new(&m);
        for &(u, v) in &[(0.1, 0.2), (1e-7, 2e-7), (0.4, 0.59), (1.0 / 3.0, 1.0 / 3.0)] {
            let s = b.sample(0, BarycentricPoint::new(u, v).unwrap());
            assert!((s.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(s.du.iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn regular_patch_matches_explicit_subdivision_limit() {
        // Loop limit points of a subdivided mesh lie on the same surface.
        let m = shapes::bumpy_cube(2);
        let fine = m.loop_subdivide().unwrap();
        let lim = fine.limit_positions();
        let basis = SurfaceBasis::new(&m);
        let nv = m.num_vertices();
        for f in 0..m.num_faces() {
            let [a, b, _] = m.faces()[f];
            let e = m.edge_id(a, b).unwrap();
            let s = basis.sample(f, BarycentricPoint::new(0.5, 0.0).unwrap());
            let (p, _, _) = basis.tangents(f, &s, m.vertices());
            assert!((p - lim[nv + e]).norm() < 1e-12, "face {f}");
            if m.valence(a) == 6 {
                let s = basis.sample(f, BarycentricPoint::new(0.0, 0.0).unwrap());
                let (p, _, _) = basis.tangents(f, &s, m.vertices());
                assert!((p - lim[a]).norm() < 1e-12, "face {f} corner");
            }
        }
    }

    #[test]
    fn tetrahedron_patches_evaluate() {
        let m = shapes::tetrahedron();
        let b = SurfaceBasis::new(&m);
        let e = b.eval(&m, 2, BarycentricPoint::new(0.25, 0.25).unwrap()).unwrap();
        assert!((e.normal.norm() - 1.0).abs() < 1e-14);
        assert!(e.position.dot(&e.normal) > 0.0);
    }
}
