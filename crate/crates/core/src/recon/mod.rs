//! Shape reconstruction from phaseless far-field data.
//!
//! The shape is parametrised by its manifold-harmonic coefficients `β`.
//! The objective compares far-field magnitudes, its gradient over the
//! active band comes from forward differences, and a pluggable optimizer
//! takes descent steps band by band, stage by stage.

mod config;
mod driver;
mod metrics;
mod optimizer;

use std::ops::Range;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bem::{scatter_far_fields, BemGeometry, BemQuadrature, DirectionSet, FarFieldDataset};
use crate::error::{Error, Result};
use crate::mesh::{ControlMesh, Vec3};
use crate::mhb::{build_basis, mht_forward, ManifoldHarmonicBasis};
use crate::subdivision::SurfaceBasis;

pub use config::{Incidences, ReconstructionConfig, StageConfig};
pub use driver::{
    default_fd_step, optimize_band, refine_mesh, run_multiresolution, write_log_csv, BandStatus, LogRow, Monitor, ReconstructionReport,
    ReconstructionState, StageReport,
};
pub use metrics::{closest_point_on_triangle, hausdorff_distance, surface_area_error, SampledSurface, TriangleGrid};
pub use optimizer::{GradientDescent, ObjectiveFn, Optimizer, StepResult};

/// Far-field simulation setup shared by goal synthesis and the objective.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    pub wavenumbers: Vec<f64>,
    pub incidences: Vec<Vec3>,
    pub observations: DirectionSet,
    pub alpha: f64,
    pub quadrature: BemQuadrature,
}

impl ForwardModel {
    pub fn new(wavenumbers: Vec<f64>, incidences: Vec<Vec3>, observations: DirectionSet, alpha: f64) -> Self {
        Self { wavenumbers, incidences, observations, alpha, quadrature: BemQuadrature::default() }
    }

    /// Model with the layout of an existing dataset.
    pub fn matching(data: &FarFieldDataset, alpha: f64) -> Self {
        Self::new(data.wavenumbers.clone(), data.incidences.clone(), data.observations.clone(), alpha)
    }

    /// Complex far fields of `mesh`. `basis` must match its connectivity.
    pub fn simulate(&self, mesh: &ControlMesh, basis: &SurfaceBasis) -> Result<FarFieldDataset> {
        let geom = BemGeometry::new(mesh, basis, &self.quadrature)?;
        let mut out = FarFieldDataset::zeros(self.wavenumbers.clone(), self.incidences.clone(), self.observations.clone());
        for (f, &kappa) in self.wavenumbers.iter().enumerate() {
            let fields = scatter_far_fields(&geom, kappa, self.alpha, &self.incidences, &self.observations.directions)?;
            for (i, v) in fields.into_iter().enumerate() {
                out.channel_mut(f, i).copy_from_slice(&v);
            }
        }
        Ok(out)
    }
}

/// Complex goal fields of a target shape.
pub fn synthesize_goal(target: &ControlMesh, model: &ForwardModel) -> Result<FarFieldDataset> {
    let kmax = model.wavenumbers.iter().cloned().fold(0.0, f64::max);
    let lambda = 2.0 * std::f64::consts::PI / kmax;
    if target.mean_edge_length() > lambda / 7.0 {
        warn!("target mesh is coarser than λ/7 at the highest frequency");
    }
    model.simulate(target, &SurfaceBasis::new(target))
}

/// `Φ̂ = Φ + δ‖Φ‖ g/‖g‖` with `δ = 10^{−SNR/20}` and `g` a complex Gaussian
/// vector drawn from `seed`. `None` returns the data unchanged.
pub fn add_noise(data: &FarFieldDataset, snr_db: Option<f64>, seed: u64) -> FarFieldDataset {
    let Some(snr) = snr_db else { return data.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<Complex64> = (0..data.values.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let gnorm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = 10f64.powf(-snr / 20.0) * data.norm() / gnorm;
    let mut out = data.clone();
    for (v, n) in out.values.iter_mut().zip(&g) {
        *v += n * scale;
    }
    out
}

/// `J = ½ Σ_j Σ_i Σ_q w_q (|Φ_G| − |Φ_m|)²`.
pub fn misfit(goal: &FarFieldDataset, model: &FarFieldDataset) -> Result<f64> {
    if !goal.same_layout(model) {
        return Err(Error::DirectionMismatch("goal and simulated data have different layouts".into()));
    }
    let q = goal.observations.len();
    let mut j = 0.0;
    for (idx, (g, m)) in goal.values.iter().zip(&model.values).enumerate() {
        let d = g.norm() - m.norm();
        j += goal.observations.weights[idx % q] * d * d;
    }
    Ok(0.5 * j)
}

/// Shape parametrised by its first `M` manifold-harmonic coefficients,
/// `x(β) = x₀ + H (β − β₀)`, so detail outside the basis is kept fixed.
#[derive(Debug)]
pub struct SpectralShape {
    template: ControlMesh,
    surface: SurfaceBasis,
    basis: ManifoldHarmonicBasis,
    beta0: DMatrix<f64>,
}

impl SpectralShape {
    pub fn new(mesh: &ControlMesh, mh_count: usize) -> Result<Self> {
        let count = mh_count.min(mesh.num_vertices());
        if count < mh_count {
            warn!("mesh has {} vertices; using {count} manifold harmonics instead of {mh_count}", mesh.num_vertices());
        }
        let (mats, basis) = build_basis(mesh, count)?;
        let beta0 = mht_forward(mesh, &basis, &mats)?.coeffs;
        Ok(Self { template: mesh.clone(), surface: SurfaceBasis::new(mesh), basis, beta0 })
    }

    pub fn len(&self) -> usize {
        self.beta0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coefficients of the starting shape.
    pub fn initial(&self) -> &DMatrix<f64> {
        &self.beta0
    }

    pub fn basis(&self) -> &ManifoldHarmonicBasis {
        &self.basis
    }

    pub fn surface(&self) -> &SurfaceBasis {
        &self.surface
    }

    pub fn template(&self) -> &ControlMesh {
        &self.template
    }

    /// Control mesh for coefficients `beta` (validated geometry).
    pub fn mesh(&self, beta: &DMatrix<f64>) -> Result<ControlMesh> {
        if beta.shape() != self.beta0.shape() {
            return Err(Error::Validation(format!("β has shape {:?}, expected {:?}", beta.shape(), self.beta0.shape())));
        }
        let delta = &self.basis.h * (beta - &self.beta0);
        let pos: Vec<Vec3> = self
            .template
            .vertices()
            .iter()
            .enumerate()
            .map(|(v, p)| p + Vec3::new(delta[(v, 0)], delta[(v, 1)], delta[(v, 2)]))
            .collect();
        let mesh = self.template.with_positions(pos)?;
        mesh.check_geometry().map_err(|e| {
            Error::DegenerateGeometry(format!("{e} at β = {:?}", beta.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>()))
        })?;
        Ok(mesh)
    }
}

/// Phaseless objective on a spectral shape.
pub struct Objective<'a> {
    pub shape: &'a SpectralShape,
    pub model: ForwardModel,
    pub goal: &'a FarFieldDataset,
}

impl<'a> Objective<'a> {
    pub fn new(shape: &'a SpectralShape, goal: &'a FarFieldDataset, alpha: f64) -> Self {
        Self { shape, model: ForwardModel::matching(goal, alpha), goal }
    }

    pub fn eval(&self, beta: &DMatrix<f64>) -> Result<f64> {
        let mesh = self.shape.mesh(beta)?;
        let sim = self.model.simulate(&mesh, self.shape.surface())?;
        misfit(self.goal, &sim)
    }

    /// Forward-difference gradient of the objective over `band`.
    pub fn fd_gradient(&self, beta: &DMatrix<f64>, j0: f64, band: Range<usize>, tau: f64) -> Result<DMatrix<f64>> {
        fd_gradient(|b| self.eval(b), beta, j0, band, tau)
    }

    /// Directional derivative along `dir` by forward or central differences.
    pub fn directional_derivative(&self, beta: &DMatrix<f64>, dir: &DMatrix<f64>, tau: f64, central: bool) -> Result<f64> {
        let plus = self.eval(&(beta + dir * tau))?;
        if central {
            Ok((plus - self.eval(&(beta - dir * tau))?) / (2.0 * tau))
        } else {
            Ok((plus - self.eval(beta)?) / tau)
        }
    }
}

/// Forward-difference gradient of `f` over the rows in `band` (all three
/// columns); other entries are zero. `j0` is `f(beta)`. The perturbed
/// evaluations run in parallel.
pub fn fd_gradient<F>(f: F, beta: &DMatrix<f64>, j0: f64, band: Range<usize>, tau: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DMatrix<f64>) -> Result<f64> + Sync,
{
    if !(tau > 0.0) {
        return Err(Error::Validation(format!("FD step must be positive, got {tau}")));
    }
    let band = band.start.min(beta.nrows())..band.end.min(beta.nrows());
    let entries: Vec<(usize, usize)> = band.flat_map(|r| (0..beta.ncols()).map(move |c| (r, c))).collect();
    let values: Vec<f64> = entries
        .par_iter()
        .map(|&(r, c)| {
            let mut b = beta.clone();
            b[(r, c)] += tau;
            Ok((f(&b)? - j0) / tau)
        })
        .collect::<Result<_>>()?;
    let mut g = DMatrix::zeros(beta.nrows(), beta.ncols());
    for (&(r, c), v) in entries.iter().zip(values) {
        g[(r, c)] = v;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::fibonacci;

    fn dataset() -> FarFieldDataset {
        let mut d = FarFieldDataset::zeros(vec![1.0, 2.0], vec![Vec3::z(), Vec3::x(), Vec3::y()], fibonacci(7));
        for (i, v) in d.values.iter_mut().enumerate() {
            *v = Complex64::new((i as f64).cos(), 0.3 * i as f64);
        }
        d
    }

    #[test]
    fn noise_is_deterministic_and_exactly_scaled() {
        let d = dataset();
        assert_eq!(add_noise(&d, None, 1), d);
        let a = add_noise(&d, Some(20.0), 9);
        assert_eq!(a, add_noise(&d, Some(20.0), 9));
        assert_ne!(a, add_noise(&d, Some(20.0), 10));
    }

    #[test]
    fn misfit_is_quadratic() {
        let d = dataset();
        let zero = d.scaled(Complex64::new(0.0, 0.0));
        let j1 = misfit(&d, &zero).unwrap();
        let j2 = misfit(&d.scaled(Complex64::new(2.0, 0.0)), &zero).unwrap();
        assert!((j2 - 4.0 * j1).abs() < 1e-12 * j2);
        assert_eq!(misfit(&d, &d).unwrap(), 0.0);
        // phase does not matter
        assert!(misfit(&d, &d.scaled(Complex64::new(0.0, 1.0))).unwrap() < 1e-20);
    }
}
