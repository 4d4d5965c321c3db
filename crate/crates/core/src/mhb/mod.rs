//! Manifold harmonic basis of a subdivision surface.
//!
//! The discrete Laplace–Beltrami operator is assembled in the subdivision
//! basis itself: stiffness `A_ij = ∫ ∇ψ_i·∇ψ_j` and mass `B_ij = ∫ ψ_i ψ_j`
//! over the limit surface. Eigenpairs of `A h = λ B h` (λ ≥ 0, ascending)
//! form the basis; coordinate functions and surface fields are expanded in
//! it by the B-inner product.

mod spectrum_io;

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{ControlMesh, Vec3};
use crate::subdivision::{BarycentricPoint, SurfaceBasis, TriangleQuadrature};

pub use spectrum_io::{read_spectrum, write_spectrum};

#[derive(Debug, Clone)]
pub struct LboMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LboMatrices {
    /// `1ᵀ B 1`, the limit-surface area.
    pub fn area(&self) -> f64 {
        self.b.sum()
    }
}

/// Stiffness and mass matrices by per-patch quadrature.
pub fn assemble_lbo(mesh: &ControlMesh, basis: &SurfaceBasis, quad: &TriangleQuadrature) -> Result<LboMatrices> {
    if !basis.matches(mesh) {
        return Err(Error::BasisMeshMismatch { expected: basis.num_vertices(), found: mesh.num_vertices() });
    }
    let locals: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| {
            let k = basis.stencil(f).len();
            let mut la = DMatrix::zeros(k, k);
            let mut lb = DMatrix::zeros(k, k);
            for (p, w) in quad.iter() {
                let s = basis.sample(f, BarycentricPoint { u: p[0], v: p[1] });
                let e = basis.frame(f, s, mesh.vertices())?;
                let dw = w * e.jacobian;
                for i in 0..k {
                    for j in 0..k {
                        la[(i, j)] += dw * e.surface_gradients[i].dot(&e.surface_gradients[j]);
                        lb[(i, j)] += dw * e.values[i] * e.values[j];
                    }
                }
            }
            Ok((la, lb))
        })
        .collect::<Result<_>>()?;
    let n = mesh.num_vertices();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for (f, (la, lb)) in locals.iter().enumerate() {
        let st = basis.stencil(f);
        for (i, &gi) in st.iter().enumerate() {
            for (j, &gj) in st.iter().enumerate() {
                a[(gi, gj)] += la[(i, j)];
                b[(gi, gj)] += lb[(i, j)];
            }
        }
    }
    // remove round-off asymmetry
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b + b.transpose()) * 0.5;
    Ok(LboMatrices { a, b })
}

/// Eigenpairs of the LBO pencil, B-orthonormal, ascending.
#[derive(Debug, Clone)]
pub struct ManifoldHarmonicBasis {
    pub eigenvalues: Vec<f64>,
    /// `N_v × k`; column `i` is `H_i`.
    pub h: DMatrix<f64>,
    /// Content hash of the mesh the basis was built on.
    pub mesh_hash: String,
}

impl ManifoldHarmonicBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn num_vertices(&self) -> usize {
        self.h.nrows()
    }

    /// First `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            h: self.h.columns(0, k).into_owned(),
            mesh_hash: self.mesh_hash.clone(),
        }
    }
}

/// Smallest `count` eigenpairs of `A h = λ B h`.
///
/// Dense Cholesky reduction to a standard symmetric problem. Each
/// eigenvector's first coefficient that is significant (above 1e-10 of
/// its largest entry) is made positive.
pub fn solve_mhb(mats: &LboMatrices, count: usize, mesh_hash: &str) -> Result<ManifoldHarmonicBasis> {
    let n = mats.a.nrows();
    if count == 0 || count > n {
        return Err(Error::Validation(format!("basis count {count} not in 1..={n}")));
    }
    let chol = mats.b.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    // C = L^-1 A L^-T
    let linv_a = l.solve_lower_triangular(&mats.a).ok_or(Error::NotPositiveDefinite)?;
    let c_t = l.solve_lower_triangular(&linv_a.transpose()).ok_or(Error::NotPositiveDefinite)?;
    let c = (&c_t + c_t.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(c, 1e-15, 10_000)
        .ok_or_else(|| Error::EigensolverFailure("symmetric QR did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let order = &order[..count];
    let y = DMatrix::from_fn(n, count, |r, c| eig.eigenvectors[(r, order[c])]);
    let lt = l.transpose();
    let mut h = lt.solve_upper_triangular(&y).ok_or(Error::NotPositiveDefinite)?;
    for mut col in h.column_iter_mut() {
        let big = col.amax();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-10 * big).copied() {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    Ok(ManifoldHarmonicBasis {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        h,
        mesh_hash: mesh_hash.to_string(),
    })
}

/// Assemble and solve in one step with the default degree-4 rule.
pub fn build_basis(mesh: &ControlMesh, count: usize) -> Result<(LboMatrices, ManifoldHarmonicBasis)> {
    let sb = SurfaceBasis::new(mesh);
    let mats = assemble_lbo(mesh, &sb, &TriangleQuadrature::new(4)?)?;
    let mhb = solve_mhb(&mats, count, &mesh.content_hash())?;
    Ok((mats, mhb))
}

/// Per-coordinate MH coefficients of a shape, with a band partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpectrum {
    /// `k × 3`; column `c` holds β for coordinate `c`.
    pub coeffs: DMatrix<f64>,
    /// Contiguous, disjoint bands of active coefficients (0-based).
    pub bands: Vec<Range<usize>>,
}

impl ShapeSpectrum {
    pub fn new(coeffs: DMatrix<f64>, band_size: usize) -> Self {
        let bands = band_partition(coeffs.nrows(), band_size);
        Self { coeffs, bands }
    }

    pub fn len(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.nrows() == 0
    }

    pub fn band_size(&self) -> usize {
        self.bands.first().map_or(1, |b| b.len())
    }

    pub fn with_band_size(mut self, n: usize) -> Self {
        self.bands = band_partition(self.len(), n);
        self
    }
}

fn check_basis(mesh: &ControlMesh, basis: &ManifoldHarmonicBasis, mats: &LboMatrices) -> Result<()> {
    let n = mesh.num_vertices();
    if basis.num_vertices() != n || mats.b.nrows() != n {
        return Err(Error::BasisMeshMismatch { expected: basis.num_vertices(), found: n });
    }
    Ok(())
}

/// MH coefficients of a real function given by its control coefficients.
pub fn mht_function(values: &DVector<f64>, basis: &ManifoldHarmonicBasis, mats: &LboMatrices) -> DVector<f64> {
    basis.h.tr_mul(&(&mats.b * values))
}

/// MH coefficients of a complex field.
pub fn mht_complex(values: &DVector<Complex64>, basis: &ManifoldHarmonicBasis, mats: &LboMatrices) -> DVector<Complex64> {
    let re = mht_function(&values.map(|z| z.re), basis, mats);
    let im = mht_function(&values.map(|z| z.im), basis, mats);
    re.zip_map(&im, Complex64::new)
}

/// Synthesis of a complex field from its first `m` coefficients.
pub fn imht_complex(coeffs: &DVector<Complex64>, basis: &ManifoldHarmonicBasis, m: usize) -> DVector<Complex64> {
    let m = m.min(coeffs.len()).min(basis.len());
    let h = basis.h.columns(0, m);
    let re = h * coeffs.rows(0, m).map(|z| z.re);
    let im = h * coeffs.rows(0, m).map(|z| z.im);
    re.zip_map(&im, Complex64::new)
}

/// β^c = Hᵀ B c^c for the control coordinates.
pub fn mht_forward(mesh: &ControlMesh, basis: &ManifoldHarmonicBasis, mats: &LboMatrices) -> Result<ShapeSpectrum> {
    check_basis(mesh, basis, mats)?;
    let n = mesh.num_vertices();
    let pos = DMatrix::from_fn(n, 3, |i, c| mesh.vertices()[i][c]);
    let coeffs = basis.h.tr_mul(&(&mats.b * pos));
    let k = coeffs.nrows();
    Ok(ShapeSpectrum::new(coeffs, k))
}

/// Control positions `c = H β` (no validation).
pub fn mht_positions(spectrum: &ShapeSpectrum, basis: &ManifoldHarmonicBasis) -> Result<Vec<Vec3>> {
    let k = spectrum.len();
    if k > basis.len() {
        return Err(Error::BasisMeshMismatch { expected: basis.len(), found: k });
    }
    let p = basis.h.columns(0, k) * &spectrum.coeffs;
    Ok((0..p.nrows()).map(|i| Vec3::new(p[(i, 0)], p[(i, 1)], p[(i, 2)])).collect())
}

/// Reconstruct the control mesh without validating geometry.
pub fn mht_inverse_unchecked(spectrum: &ShapeSpectrum, basis: &ManifoldHarmonicBasis, template: &ControlMesh) -> Result<ControlMesh> {
    if template.num_vertices() != basis.num_vertices() {
        return Err(Error::BasisMeshMismatch { expected: basis.num_vertices(), found: template.num_vertices() });
    }
    template.with_positions(mht_positions(spectrum, basis)?)
}

/// Reconstruct the control mesh; `DegenerateGeometry` if any control face
/// collapses. Use [`mht_inverse_unchecked`] to inspect such a result.
pub fn mht_inverse(spectrum: &ShapeSpectrum, basis: &ManifoldHarmonicBasis, template: &ControlMesh) -> Result<ControlMesh> {
    let mesh = mht_inverse_unchecked(spectrum, basis, template)?;
    match mesh.check_geometry() {
        Ok(()) => Ok(mesh),
        Err(Error::DegenerateFace(f)) => Err(Error::DegenerateGeometry(format!("control face {f} has zero area"))),
        Err(e) => Err(e),
    }
}

/// Zero every coefficient above the first `m`; bands then cover the
/// retained coefficients only.
pub fn lowpass(spectrum: &ShapeSpectrum, m: usize) -> ShapeSpectrum {
    let mut out = spectrum.clone();
    let k = out.len();
    let m = m.clamp(1, k.max(1));
    out.coeffs.rows_mut(m, k - m).fill(0.0);
    out.bands = band_partition(m, spectrum.band_size());
    out
}

/// Contiguous bands of size `n` covering `0..k` (the last may be shorter).
pub fn band_partition(k: usize, n: usize) -> Vec<Range<usize>> {
    let n = n.max(1);
    (0..k).step_by(n).map(|s| s..(s + n).min(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        assert_eq!(band_partition(100, 50), vec![0..50, 50..100]);
        assert_eq!(band_partition(10, 50), vec![0..10]);
        let b = band_partition(101, 50);
        assert_eq!(b.iter().map(|r| r.len()).collect::<Vec<_>>(), vec![50, 50, 1]);
    }
}
