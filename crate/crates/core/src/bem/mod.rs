//! Isogeometric Galerkin BEM for sound-soft scattering.
//!
//! The boundary density `Λ = ∂Φ/∂n` of the total field is expanded in the
//! subdivision basis and solves the Burton–Miller equation
//!
//! `(1−α) S[Λ] + αβ (½Λ + D′[Λ]) = (1−α) Φⁱ + αβ ∂Φⁱ/∂n`,  `β = i/κ`,
//!
//! with `G = e^{−iκR}/(4πR)` (time dependence `e^{iωt}`). The far field is
//! `F(r̂) = −(1/4π) ∫ Λ(y) e^{iκ r̂·y} dy`.

pub mod dataset;
pub mod directions;
pub mod oracle;
mod pairs;

use std::f64::consts::PI;

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{ControlMesh, Vec3};
use crate::subdivision::{SurfaceBasis, TriangleQuadrature};
use pairs::{PairKind, PointSet};

pub use dataset::FarFieldDataset;
pub use directions::{fibonacci, from_angles, lebedev26, to_angles, DirectionSet};
pub use oracle::sphere_farfield_oracle;

const FOUR_PI: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    pub direction: Vec3,
    pub wavenumber: f64,
    pub amplitude: Complex64,
}

impl IncidentWave {
    pub fn new(direction: Vec3, wavenumber: f64) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !(wavenumber > 0.0) {
            return Err(Error::Validation("incident wave needs a nonzero direction and κ > 0".into()));
        }
        Ok(Self { direction: direction / n, wavenumber, amplitude: Complex64::new(1.0, 0.0) })
    }

    pub fn with_amplitude(mut self, a: Complex64) -> Self {
        self.amplitude = a;
        self
    }
}

/// `A e^{−iκ d·r}` and its gradient.
pub fn plane_wave(w: &IncidentWave, r: &Vec3) -> (Complex64, [Complex64; 3]) {
    let phase = -w.wavenumber * w.direction.dot(r);
    let v = w.amplitude * Complex64::from_polar(1.0, phase);
    let g = -Complex64::i() * w.wavenumber * v;
    (v, [g * w.direction.x, g * w.direction.y, g * w.direction.z])
}

/// Quadrature settings for the double surface integrals.
///
/// Pairs are classified by connectivity so the rule used for a pair never
/// changes under geometry updates: coincident patches use a Duffy-type
/// rule centred at each outer point, patches sharing an edge or vertex use
/// product rules graded toward the shared entity on both sides, patches in
/// each other's two-ring use a uniformly split rule, and all other pairs
/// use the plain rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BemQuadrature {
    pub far_degree: usize,
    /// Base rule on the sub-triangles of the graded rules.
    pub graded_degree: usize,
    pub near_split: usize,
    pub adjacent_depth: usize,
    pub duffy_order: usize,
    pub coincident_outer_split: usize,
}

impl Default for BemQuadrature {
    fn default() -> Self {
        Self { far_degree: 4, graded_degree: 2, near_split: 1, adjacent_depth: 3, duffy_order: 6, coincident_outer_split: 0 }
    }
}

/// Quadrature points and basis samples of a mesh, ready for assembly.
pub struct BemGeometry<'a> {
    basis: &'a SurfaceBasis,
    positions: Vec<Vec3>,
    outer_rule: TriangleQuadrature,
    duffy_order: usize,
    outer: Vec<PointSet>,
    num_vertices: usize,
    stencils: Vec<Vec<usize>>,
    far: Vec<PointSet>,
    near: Vec<PointSet>,
    vertex: Vec<[PointSet; 3]>,
    edge: Vec<[PointSet; 3]>,
    classes: Vec<Vec<(usize, PairKind)>>,
    mean_edge: f64,
}

impl<'a> BemGeometry<'a> {
    pub fn new(mesh: &ControlMesh, basis: &'a SurfaceBasis, q: &BemQuadrature) -> Result<Self> {
        if !basis.matches(mesh) {
            return Err(Error::BasisMeshMismatch { expected: basis.num_vertices(), found: mesh.num_vertices() });
        }
        let far_rule = TriangleQuadrature::new(q.far_degree)?;
        let near_rule = far_rule.refined(q.near_split);
        let outer_rule = far_rule.refined(q.coincident_outer_split);
        let graded_rule = TriangleQuadrature::new(q.graded_degree)?;
        let vertex_rules: Vec<TriangleQuadrature> =
            (0..3).map(|c| pairs::graded_toward_vertex(&graded_rule, c, q.adjacent_depth)).collect();
        let edge_rules: Vec<TriangleQuadrature> =
            (0..3).map(|e| pairs::graded_toward_edge(&graded_rule, e, q.adjacent_depth)).collect();
        let pos = mesh.vertices();
        let nf = mesh.num_faces();
        type FaceSets = (PointSet, PointSet, [PointSet; 3], [PointSet; 3], PointSet);
        let sets: Vec<FaceSets> = (0..nf)
            .into_par_iter()
            .map(|f| -> Result<FaceSets> {
                let mk = |r: &TriangleQuadrature| PointSet::new(basis, pos, f, r);
                let v = [mk(&vertex_rules[0])?, mk(&vertex_rules[1])?, mk(&vertex_rules[2])?];
                let e = [mk(&edge_rules[0])?, mk(&edge_rules[1])?, mk(&edge_rules[2])?];
                let c = mk(&outer_rule)?;
                Ok((mk(&far_rule)?, mk(&near_rule)?, v, e, c))
            })
            .collect::<Result<_>>()?;
        let mut far = Vec::with_capacity(nf);
        let mut near = Vec::with_capacity(nf);
        let mut vertex = Vec::with_capacity(nf);
        let mut edge = Vec::with_capacity(nf);
        let mut outer = Vec::with_capacity(nf);
        for (a, b, c, d, e) in sets {
            far.push(a);
            near.push(b);
            vertex.push(c);
            edge.push(d);
            outer.push(e);
        }
        Ok(Self {
            basis,
            positions: pos.to_vec(),
            outer_rule,
            duffy_order: q.duffy_order,
            outer,
            num_vertices: mesh.num_vertices(),
            stencils: (0..nf).map(|f| basis.stencil(f).to_vec()).collect(),
            far,
            near,
            vertex,
            edge,
            classes: pairs::classify(mesh),
            mean_edge: mesh.mean_edge_length(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_faces(&self) -> usize {
        self.stencils.len()
    }

    /// Mass matrix `∫ ψ_i ψ_j` with the far rule.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let n = self.num_vertices;
        let mut b = DMatrix::zeros(n, n);
        for (f, s) in self.far.iter().enumerate() {
            let local = s.mass();
            scatter_real(&mut b, &self.stencils[f], &self.stencils[f], &local);
        }
        b
    }
}

fn scatter_real(m: &mut DMatrix<f64>, rows: &[usize], cols: &[usize], block: &DMatrix<f64>) {
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            m[(r, c)] += block[(i, j)];
        }
    }
}

fn scatter(m: &mut DMatrix<Complex64>, rows: &[usize], cols: &[usize], block: &DMatrix<Complex64>) {
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            m[(r, c)] += block[(i, j)];
        }
    }
}

#[derive(Debug, Clone)]
pub struct BemSystem {
    pub z: DMatrix<Complex64>,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: Complex64,
}

fn check_params(kappa: f64, alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Validation(format!("α = {alpha} outside [0, 1]")));
    }
    if !(kappa > 0.0 || (kappa == 0.0 && alpha == 0.0)) || !kappa.is_finite() {
        return Err(Error::Validation(format!("κ = {kappa} must be positive")));
    }
    Ok(())
}

fn bm_beta(kappa: f64) -> Complex64 {
    if kappa > 0.0 {
        Complex64::new(0.0, 1.0 / kappa)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Dense Galerkin matrix `Z`. `κ = 0` is accepted for `α = 0` (Laplace
/// single layer).
pub fn assemble_system(geom: &BemGeometry, kappa: f64, alpha: f64) -> Result<BemSystem> {
    check_params(kappa, alpha)?;
    let lambda = 2.0 * PI / kappa;
    if kappa > 0.0 && geom.mean_edge > lambda / 7.0 {
        warn!(
            "mean control edge {:.3} m exceeds λ/7 = {:.3} m at κ = {kappa}",
            geom.mean_edge,
            lambda / 7.0
        );
    }
    let beta = bm_beta(kappa);
    let kern = pairs::Kernel { kappa, s: Complex64::new(1.0 - alpha, 0.0), d: beta * alpha };
    let n = geom.num_vertices;
    let nf = geom.num_faces();
    let mut z = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let chunk = 16;
    for start in (0..nf).step_by(chunk) {
        let end = (start + chunk).min(nf);
        let blocks: Vec<Vec<(usize, usize, DMatrix<Complex64>)>> = (start..end)
            .into_par_iter()
            .map(|f| pair_row(geom, f, &kern))
            .collect::<Result<_>>()?;
        for row in blocks {
            for (t, s, b) in row {
                scatter(&mut z, &geom.stencils[t], &geom.stencils[s], &b);
            }
        }
    }
    if alpha > 0.0 {
        let half = beta * alpha * 0.5;
        let mass = geom.mass_matrix();
        z.zip_apply(&mass, |a, b| *a += half * b);
    }
    Ok(BemSystem { z, kappa, alpha, beta })
}

/// Blocks for all unordered pairs `(f, g)` with `g ≥ f`, as
/// (test face, source face, block).
fn pair_row(geom: &BemGeometry, f: usize, kern: &pairs::Kernel) -> Result<Vec<(usize, usize, DMatrix<Complex64>)>> {
    let own = pairs::coincident_block(
        geom.basis,
        &geom.positions,
        f,
        &geom.outer[f],
        &geom.outer_rule,
        geom.duffy_order,
        kern,
    )?;
    let mut out = vec![(f, f, own)];
    let classes = &geom.classes[f];
    let mut ci = 0;
    for g in f + 1..geom.num_faces() {
        while ci < classes.len() && classes[ci].0 < g {
            ci += 1;
        }
        let kind = if ci < classes.len() && classes[ci].0 == g { classes[ci].1 } else { PairKind::Far };
        let (a, b) = match kind {
            PairKind::Far => (&geom.far[f], &geom.far[g]),
            PairKind::Near => (&geom.near[f], &geom.near[g]),
            PairKind::Vertex(i, j) => (&geom.vertex[f][i], &geom.vertex[g][j]),
            PairKind::Edge(i, j) => (&geom.edge[f][i], &geom.edge[g][j]),
        };
        let (fg, gf) = pairs::pair_blocks(a, b, kern);
        out.push((f, g, fg));
        out.push((g, f, gf));
    }
    Ok(out)
}

/// `v_m = ∫ ψ_m [(1−α)Φⁱ + αβ n̂·∇Φⁱ]`.
pub fn assemble_rhs(geom: &BemGeometry, wave: &IncidentWave, alpha: f64) -> Result<DVector<Complex64>> {
    check_params(wave.wavenumber, alpha)?;
    let beta = bm_beta(wave.wavenumber);
    let mut v = DVector::from_element(geom.num_vertices, Complex64::new(0.0, 0.0));
    for (f, set) in geom.far.iter().enumerate() {
        for q in 0..set.len() {
            let (phi, grad) = plane_wave(wave, &set.pos[q]);
            let n = set.normal[q];
            let dn = grad[0] * n.x + grad[1] * n.y + grad[2] * n.z;
            let val = phi * (1.0 - alpha) + beta * alpha * dn;
            for (i, &gi) in geom.stencils[f].iter().enumerate() {
                v[gi] += set.wpsi[(q, i)] * val;
            }
        }
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct BemSolution {
    pub coeffs: DVector<Complex64>,
    pub residual: f64,
}

/// LU factorisation of a system, reusable across right-hand sides.
pub struct FactoredSystem {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    z: DMatrix<Complex64>,
    pub condition_estimate: f64,
}

pub fn factor(system: &BemSystem) -> Result<FactoredSystem> {
    if system.z.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::SingularMatrix { condition: f64::INFINITY });
    }
    let lu = system.z.clone().lu();
    let u = lu.u();
    let d: Vec<f64> = u.diagonal().iter().map(|x| x.norm()).collect();
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let condition_estimate = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition_estimate < 1e14) {
        return Err(Error::SingularMatrix { condition: condition_estimate });
    }
    Ok(FactoredSystem { lu, z: system.z.clone(), condition_estimate })
}

impl FactoredSystem {
    pub fn solve(&self, rhs: &DVector<Complex64>) -> Result<BemSolution> {
        let coeffs = self
            .lu
            .solve(rhs)
            .ok_or(Error::SingularMatrix { condition: self.condition_estimate })?;
        let r = &self.z * &coeffs - rhs;
        let denom = rhs.norm();
        let residual = if denom > 0.0 { r.norm() / denom } else { r.norm() };
        if !(residual <= 1e-10) {
            return Err(Error::SingularMatrix { condition: self.condition_estimate });
        }
        Ok(BemSolution { coeffs, residual })
    }
}

/// Direct dense solve of `Z a = v`.
pub fn solve_density(system: &BemSystem, rhs: &DVector<Complex64>) -> Result<BemSolution> {
    factor(system)?.solve(rhs)
}

/// Galerkin solve restricted to the span of the columns of `h` (e.g. the
/// first `M` manifold harmonics): `(HᵀZH) c = Hᵀv`, density `H c`.
pub fn solve_in_basis(system: &BemSystem, rhs: &DVector<Complex64>, h: &DMatrix<f64>) -> Result<BemSolution> {
    if h.nrows() != system.z.nrows() {
        return Err(Error::BasisMeshMismatch { expected: h.nrows(), found: system.z.nrows() });
    }
    let hc = h.map(|x| Complex64::new(x, 0.0));
    let reduced = BemSystem { z: hc.tr_mul(&system.z) * &hc, ..*system };
    let sol = factor(&reduced)?.solve(&hc.tr_mul(rhs))?;
    Ok(BemSolution { coeffs: &hc * sol.coeffs, residual: sol.residual })
}

/// Far-field values on a direction set.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    pub directions: DirectionSet,
    pub values: Vec<Complex64>,
}

impl FarFieldPattern {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }
}

/// Far field of a solution on a direction set.
pub fn far_field(geom: &BemGeometry, sol: &BemSolution, directions: &DirectionSet, kappa: f64) -> FarFieldPattern {
    FarFieldPattern {
        values: far_field_values(geom, sol, &directions.directions, kappa),
        directions: directions.clone(),
    }
}

/// `F(r̂) = −(1/4π) ∫ Λ e^{iκ r̂·y}` at each direction.
pub fn far_field_values(geom: &BemGeometry, sol: &BemSolution, directions: &[Vec3], kappa: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); directions.len()];
    for (f, set) in geom.near.iter().enumerate() {
        let st = &geom.stencils[f];
        for q in 0..set.len() {
            let mut lam = Complex64::new(0.0, 0.0);
            for (i, &gi) in st.iter().enumerate() {
                lam += sol.coeffs[gi] * set.wpsi[(q, i)];
            }
            if lam == Complex64::new(0.0, 0.0) {
                continue;
            }
            let y = set.pos[q];
            for (o, d) in out.iter_mut().zip(directions) {
                *o += lam * Complex64::from_polar(1.0, kappa * d.dot(&y));
            }
        }
    }
    out.iter_mut().for_each(|o| *o *= -1.0 / FOUR_PI);
    out
}

/// Weighted relative L2 difference `‖c − r‖/‖r‖` over directions.
pub fn relative_l2(candidate: &[Complex64], reference: &[Complex64], weights: &[f64]) -> Result<f64> {
    if candidate.len() != reference.len() || weights.len() != reference.len() {
        return Err(Error::DirectionMismatch(format!(
            "{} candidate values, {} reference values, {} weights",
            candidate.len(),
            reference.len(),
            weights.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((c, r), w) in candidate.iter().zip(reference).zip(weights) {
        num += w * (c - r).norm_sqr();
        den += w * r.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// `ε_L2` between two patterns on the same direction set.
pub fn epsilon_l2(candidate: &FarFieldPattern, reference: &FarFieldPattern) -> Result<f64> {
    let (c, r) = (&candidate.directions, &reference.directions);
    if c.len() != r.len() || c.directions.iter().zip(&r.directions).any(|(a, b)| (a - b).norm() > 1e-12) {
        return Err(Error::DirectionMismatch(format!("{} vs {} directions", c.len(), r.len())));
    }
    relative_l2(&candidate.values, &reference.values, &r.weights)
}

/// Assemble, factor and solve for several incident directions at one
/// wavenumber; returns far fields per incidence.
pub fn scatter_far_fields(
    geom: &BemGeometry,
    kappa: f64,
    alpha: f64,
    incidences: &[Vec3],
    observations: &[Vec3],
) -> Result<Vec<Vec<Complex64>>> {
    let sys = assemble_system(geom, kappa, alpha)?;
    let fac = factor(&sys)?;
    incidences
        .iter()
        .map(|d| {
            let w = IncidentWave::new(*d, kappa)?;
            let sol = fac.solve(&assemble_rhs(geom, &w, alpha)?)?;
            Ok(far_field_values(geom, &sol, observations, kappa))
        })
        .collect()
}
