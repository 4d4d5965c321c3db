//! Python bindings: meshes, manifold harmonics, forward scattering and
//! reconstruction.

use std::path::Path;

use mhrecon::bem::{fibonacci, lebedev26, sphere_farfield_oracle, DirectionSet, FarFieldDataset};
use mhrecon::mhb::{build_basis, lowpass, mht_forward, mht_inverse, mht_inverse_unchecked, LboMatrices, ManifoldHarmonicBasis, ShapeSpectrum};
use mhrecon::recon::{self, ForwardModel, ReconstructionConfig};
use mhrecon::{shapes, ControlMesh, Vec3};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(mhrecon, MhreconError, PyException);

fn to_py(e: mhrecon::Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    if e.is_validation() {
        PyValueError::new_err(msg)
    } else {
        MhreconError::new_err(msg)
    }
}

fn vec3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

fn rows(points: &[Vec3]) -> Vec<[f64; 3]> {
    points.iter().map(|p| [p.x, p.y, p.z]).collect()
}

fn observation_set(n: usize) -> DirectionSet {
    if n == 26 {
        lebedev26()
    } else {
        fibonacci(n)
    }
}

/// Closed triangle control mesh of a Loop subdivision surface.
#[pyclass(name = "Mesh", module = "mhrecon", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyMesh {
    inner: ControlMesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> PyResult<Self> {
        ControlMesh::from_arrays(&vertices, &faces).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        mhrecon::mesh::load_obj(path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn icosphere(level: usize) -> Self {
        Self { inner: shapes::icosphere(level) }
    }

    /// Control mesh whose limit surface interpolates a sphere at the vertices.
    #[staticmethod]
    #[pyo3(signature = (level, radius=1.0))]
    fn sphere(level: usize, radius: f64) -> Self {
        Self { inner: shapes::limit_fitted_sphere(level, radius) }
    }

    #[staticmethod]
    fn ellipsoid(level: usize, semi_axes: [f64; 3]) -> Self {
        Self { inner: shapes::limit_fitted_ellipsoid(level, semi_axes) }
    }

    #[staticmethod]
    fn bumpy_cube(level: usize) -> Self {
        Self { inner: shapes::bumpy_cube(level) }
    }

    fn save(&self, path: &str) -> PyResult<()> {
        mhrecon::mesh::save_obj(&self.inner, path).map_err(to_py)
    }

    fn vertices(&self) -> Vec<[f64; 3]> {
        rows(self.inner.vertices())
    }

    fn faces(&self) -> Vec<[usize; 3]> {
        self.inner.faces().to_vec()
    }

    fn limit_positions(&self) -> Vec<[f64; 3]> {
        rows(&self.inner.limit_positions())
    }

    fn subdivided(&self, levels: usize) -> PyResult<Self> {
        self.inner.subdivided(levels).map(|inner| Self { inner }).map_err(to_py)
    }

    fn check_geometry(&self) -> PyResult<()> {
        self.inner.check_geometry().map_err(to_py)
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_faces(&self) -> usize {
        self.inner.num_faces()
    }

    #[getter]
    fn mean_edge_length(&self) -> f64 {
        self.inner.mean_edge_length()
    }

    #[getter]
    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, faces={})", self.inner.num_vertices(), self.inner.num_faces())
    }
}

/// Laplace–Beltrami eigenbasis of a mesh.
#[pyclass(name = "HarmonicBasis", module = "mhrecon", frozen)]
pub struct PyHarmonicBasis {
    mats: LboMatrices,
    basis: ManifoldHarmonicBasis,
    template: ControlMesh,
}

impl PyHarmonicBasis {
    fn spectrum(&self, coeffs: &[[f64; 3]]) -> PyResult<ShapeSpectrum> {
        if coeffs.len() != self.basis.len() {
            return Err(PyValueError::new_err(format!("expected {} coefficient rows, got {}", self.basis.len(), coeffs.len())));
        }
        let m = DMatrix::from_fn(coeffs.len(), 3, |i, j| coeffs[i][j]);
        Ok(ShapeSpectrum::new(m, self.basis.len()))
    }
}

#[pymethods]
impl PyHarmonicBasis {
    #[new]
    fn new(mesh: &PyMesh, count: usize) -> PyResult<Self> {
        let (mats, basis) = build_basis(&mesh.inner, count).map_err(to_py)?;
        Ok(Self { mats, basis, template: mesh.inner.clone() })
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.basis.eigenvalues.clone()
    }

    fn __len__(&self) -> usize {
        self.basis.len()
    }

    /// Spectral coefficients of the template's control points, one row per harmonic.
    fn forward(&self) -> PyResult<Vec<[f64; 3]>> {
        let s = mht_forward(&self.template, &self.basis, &self.mats).map_err(to_py)?;
        Ok(s.coeffs.row_iter().map(|r| [r[0], r[1], r[2]]).collect())
    }

    fn inverse(&self, coeffs: Vec<[f64; 3]>) -> PyResult<PyMesh> {
        let s = self.spectrum(&coeffs)?;
        mht_inverse(&s, &self.basis, &self.template).map(|inner| PyMesh { inner }).map_err(to_py)
    }

    /// Template rebuilt from its first `m` harmonics (no geometry check).
    fn compress(&self, m: usize) -> PyResult<PyMesh> {
        let s = mht_forward(&self.template, &self.basis, &self.mats).map_err(to_py)?;
        mht_inverse_unchecked(&lowpass(&s, m), &self.basis, &self.template)
            .map(|inner| PyMesh { inner })
            .map_err(to_py)
    }
}

/// Far-field samples indexed by (wavenumber, incidence, observation).
#[pyclass(name = "FarField", module = "mhrecon", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyFarField {
    inner: FarFieldDataset,
}

#[pymethods]
impl PyFarField {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        FarFieldDataset::from_text(text.as_bytes()).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.inner.wavenumbers.len(), self.inner.incidences.len(), self.inner.observations.len())
    }

    #[getter]
    fn wavenumbers(&self) -> Vec<f64> {
        self.inner.wavenumbers.clone()
    }

    #[getter]
    fn observations(&self) -> Vec<[f64; 3]> {
        rows(&self.inner.observations.directions)
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values.clone()
    }

    fn magnitudes(&self) -> Vec<f64> {
        self.inner.magnitudes()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    #[pyo3(signature = (snr_db, seed=1))]
    fn with_noise(&self, snr_db: f64, seed: u64) -> Self {
        Self { inner: recon::add_noise(&self.inner, Some(snr_db), seed) }
    }

    fn misfit(&self, model: &PyFarField) -> PyResult<f64> {
        recon::misfit(&self.inner, &model.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let (f, i, o) = self.shape();
        format!("FarField(wavenumbers={f}, incidences={i}, observations={o})")
    }
}

/// Far field of a sound-soft scatterer. `observations` = 26 selects the
/// Lebedev rule, any other count a Fibonacci lattice.
#[pyfunction]
#[pyo3(signature = (mesh, wavenumbers, incidences, observations=26, alpha=0.5))]
fn simulate(mesh: &PyMesh, wavenumbers: Vec<f64>, incidences: Vec<[f64; 3]>, observations: usize, alpha: f64) -> PyResult<PyFarField> {
    let inc = incidences.into_iter().map(|d| vec3(d).normalize()).collect();
    let model = ForwardModel::new(wavenumbers, inc, observation_set(observations), alpha);
    recon::synthesize_goal(&mesh.inner, &model).map(|inner| PyFarField { inner }).map_err(to_py)
}

/// Analytic far field of a centred sound-soft sphere.
#[pyfunction]
fn sphere_far_field(radius: f64, kappa: f64, incidence: [f64; 3], directions: Vec<[f64; 3]>) -> Vec<Complex64> {
    let dirs: Vec<Vec3> = directions.into_iter().map(vec3).collect();
    sphere_farfield_oracle(radius, kappa, &vec3(incidence), &dirs)
}

#[pyfunction]
fn surface_area_error(mesh: &PyMesh, reference: &PyMesh) -> PyResult<f64> {
    recon::surface_area_error(&mesh.inner, &reference.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (a, b, samples=10))]
fn hausdorff_distance(a: &PyMesh, b: &PyMesh, samples: usize) -> PyResult<f64> {
    recon::hausdorff_distance(&a.inner, &b.inner, samples).map_err(to_py)
}

/// Run the banded multi-resolution optimizer. Returns the final mesh and the
/// convergence log as `(stage, band, iteration, J, S_err, Hausdorff, wall_time_s)` tuples.
#[pyfunction]
#[pyo3(signature = (config, goals, initial, reference=None, out_dir=None))]
#[allow(clippy::type_complexity)]
fn reconstruct(
    config: &str,
    goals: Vec<PyFarField>,
    initial: &PyMesh,
    reference: Option<&PyMesh>,
    out_dir: Option<&str>,
) -> PyResult<(PyMesh, Vec<(usize, usize, usize, f64, f64, f64, f64)>)> {
    let cfg = ReconstructionConfig::from_toml(config).map_err(to_py)?;
    let goals: Vec<FarFieldDataset> = goals.into_iter().map(|g| g.inner).collect();
    let report = recon::run_multiresolution(&cfg, &goals, &initial.inner, reference.map(|r| &r.inner), out_dir.map(Path::new))
        .map_err(to_py)?;
    let log = report
        .log
        .iter()
        .map(|r| (r.stage, r.band, r.iteration, r.j, r.s_err, r.hausdorff, r.wall_time_s))
        .collect();
    Ok((PyMesh { inner: report.mesh }, log))
}

#[pymodule(name = "mhrecon")]
fn py_mhrecon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyHarmonicBasis>()?;
    m.add_class::<PyFarField>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_far_field, m)?)?;
    m.add_function(wrap_pyfunction!(surface_area_error, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff_distance, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add("MhreconError", m.py().get_type::<MhreconError>())?;
    Ok(())
}
