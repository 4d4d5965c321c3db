//! Volumetric source reconstruction: back-projection of far-field data onto
//! a voxel grid and extraction of an initial control mesh.

mod decimate;
mod isosurface;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bem::FarFieldDataset;
use crate::error::{Error, Result};
use crate::mesh::{ControlMesh, Vec3};

pub use decimate::decimate;
pub use isosurface::{isosurface, select_largest_component};

/// Axis-aligned voxel grid with isotropic spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Vec3,
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: Vec3, spacing: f64, dims: [usize; 3]) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() || dims.iter().any(|&n| n < 2) {
            return Err(Error::Validation(format!("grid needs spacing > 0 and dims ≥ 2, got {spacing} {dims:?}")));
        }
        Ok(Self { origin, spacing, dims })
    }

    /// Cube of edge `size` centred at `centre` with `n` points per axis.
    pub fn cube(centre: Vec3, size: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!("grid needs at least 2 points per axis, got {n}")));
        }
        Self::new(centre - Vec3::repeat(size / 2.0), size / (n - 1) as f64, [n; 3])
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, x fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        [i, j, idx / (self.dims[0] * self.dims[1])]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    fn axis(&self, a: usize) -> Vec<f64> {
        (0..self.dims[a]).map(|i| self.origin[a] + i as f64 * self.spacing).collect()
    }
}

/// Back-projected field and its normalised intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub spec: GridSpec,
    /// Coherent sum over all channels.
    pub field: Vec<Complex64>,
    /// `|field|` normalised to max 1 (all zero for zero data).
    pub intensity: Vec<f64>,
}

impl VoxelGrid {
    /// Grid with a given intensity and no field (for meshing tests and files).
    pub fn from_intensity(spec: GridSpec, intensity: Vec<f64>) -> Result<Self> {
        if intensity.len() != spec.len() || intensity.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Validation("intensity must be finite, nonnegative and match the grid".into()));
        }
        Ok(Self { spec, field: Vec::new(), intensity })
    }

    pub fn argmax(&self) -> [usize; 3] {
        let (idx, _) = self
            .intensity
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        self.spec.coords(idx)
    }

    /// Flat little-endian float64 intensity (x fastest) plus a text header
    /// at `<path>.hdr`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.intensity {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        let s = &self.spec;
        let mut hdr = String::new();
        let _ = writeln!(hdr, "origin {:.17e} {:.17e} {:.17e}", s.origin.x, s.origin.y, s.origin.z);
        let _ = writeln!(hdr, "spacing {:.17e}", s.spacing);
        let _ = writeln!(hdr, "dims {} {} {}", s.dims[0], s.dims[1], s.dims[2]);
        std::fs::write(header_path(path), hdr)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let hdr = std::fs::read_to_string(header_path(path))?;
        let mut origin = None;
        let mut spacing = None;
        let mut dims = None;
        for (n, line) in hdr.lines().enumerate() {
            let mut it = line.split_whitespace();
            let key = it.next().unwrap_or("");
            let vals: Vec<&str> = it.collect();
            let bad = || Error::Parse { line: n + 1, msg: format!("bad `{key}` line") };
            let floats = || vals.iter().map(|v| v.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
            match (key, vals.len()) {
                ("origin", 3) => {
                    let v = floats().map_err(|_| bad())?;
                    origin = Some(Vec3::new(v[0], v[1], v[2]));
                }
                ("spacing", 1) => spacing = Some(vals[0].parse::<f64>().map_err(|_| bad())?),
                ("dims", 3) => {
                    let v = vals.iter().map(|v| v.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>();
                    let v = v.map_err(|_| bad())?;
                    dims = Some([v[0], v[1], v[2]]);
                }
                ("", _) => {}
                _ => return Err(bad()),
            }
        }
        let missing = |what: &str| Error::Parse { line: 0, msg: format!("header lacks `{what}`") };
        let spec = GridSpec::new(
            origin.ok_or_else(|| missing("origin"))?,
            spacing.ok_or_else(|| missing("spacing"))?,
            dims.ok_or_else(|| missing("dims"))?,
        )?;
        let bytes = std::fs::read(path)?;
        if bytes.len() != 8 * spec.len() {
            return Err(Error::Parse { line: 0, msg: format!("expected {} bytes, found {}", 8 * spec.len(), bytes.len()) });
        }
        let intensity = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::from_intensity(spec, intensity)
    }
}

fn header_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    s.into()
}

/// Back-projection of one (incidence, wavenumber) channel:
/// `Φ_eq(r) = Σ_q w_q Φ^s(r̂_q) e^{−iκ r̂_q·r}`.
pub fn backproject_channel(values: &[Complex64], directions: &[Vec3], weights: &[f64], kappa: f64, spec: &GridSpec) -> Vec<Complex64> {
    let axes = [spec.axis(0), spec.axis(1), spec.axis(2)];
    let [nx, ny, nz] = spec.dims;
    let mut out = vec![Complex64::new(0.0, 0.0); spec.len()];
    for ((v, d), w) in values.iter().zip(directions).zip(weights) {
        let a = v * *w;
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        // separable phase factors per axis
        let fx: Vec<Complex64> = axes[0].iter().map(|x| Complex64::from_polar(1.0, -kappa * d.x * x)).collect();
        let fy: Vec<Complex64> = axes[1].iter().map(|y| Complex64::from_polar(1.0, -kappa * d.y * y)).collect();
        let fz: Vec<Complex64> = axes[2].iter().map(|z| Complex64::from_polar(1.0, -kappa * d.z * z)).collect();
        for k in 0..nz {
            let az = a * fz[k];
            for j in 0..ny {
                let ayz = az * fy[j];
                let row = &mut out[nx * (j + ny * k)..nx * (j + ny * k + 1)];
                for (o, x) in row.iter_mut().zip(&fx) {
                    *o += ayz * x;
                }
            }
        }
    }
    out
}

/// Coherent back-projection `Φ̃(r) = Σ_m Σ_n Φ_eq^{m,n}(r) e^{iκ_n r·k̂_m}`.
pub fn backproject(data: &FarFieldDataset, spec: &GridSpec) -> Result<VoxelGrid> {
    if data.phaseless {
        return Err(Error::InsufficientData("back-projection needs complex far-field values".into()));
    }
    if data.wavenumbers.is_empty() || data.incidences.is_empty() || data.observations.is_empty() {
        return Err(Error::InsufficientData("empty far-field dataset".into()));
    }
    if data.wavenumbers.len() == 1 && data.incidences.len() == 1 {
        warn!("back-projection from a single frequency and incidence has poor resolution");
    }
    let channels: Vec<(usize, usize)> = (0..data.wavenumbers.len())
        .flat_map(|f| (0..data.incidences.len()).map(move |i| (f, i)))
        .collect();
    let obs = &data.observations;
    let fields: Vec<Vec<Complex64>> = channels
        .par_iter()
        .map(|&(f, i)| {
            let kappa = data.wavenumbers[f];
            let mut field = backproject_channel(data.channel(f, i), &obs.directions, &obs.weights, kappa, spec);
            let d = data.incidences[i];
            for (idx, v) in field.iter_mut().enumerate() {
                let [a, b, c] = spec.coords(idx);
                *v *= Complex64::from_polar(1.0, kappa * spec.point(a, b, c).dot(&d));
            }
            field
        })
        .collect();
    let mut field = vec![Complex64::new(0.0, 0.0); spec.len()];
    for ch in &fields {
        for (o, v) in field.iter_mut().zip(ch) {
            *o += v;
        }
    }
    let mut intensity: Vec<f64> = field.iter().map(|z| z.norm()).collect();
    let max = intensity.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        intensity.iter_mut().for_each(|x| *x /= max);
    }
    Ok(VoxelGrid { spec: *spec, field, intensity })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// ASCII rows `x y z weight`.
    pub fn to_xyz(&self) -> String {
        let mut s = String::new();
        for (p, w) in self.points.iter().zip(&self.weights) {
            let _ = writeln!(s, "{:.17e} {:.17e} {:.17e} {:.17e}", p.x, p.y, p.z, w);
        }
        s
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("threshold {threshold} outside (0, 1)")))
    }
}

/// Voxels with intensity at least `threshold · max`.
pub fn extract_point_cloud(grid: &VoxelGrid, threshold: f64) -> Result<PointCloud> {
    check_threshold(threshold)?;
    let max = grid.intensity.iter().cloned().fold(0.0, f64::max);
    let cut = threshold * max;
    let mut cloud = PointCloud { points: Vec::new(), weights: Vec::new() };
    if max > 0.0 {
        for (idx, &v) in grid.intensity.iter().enumerate() {
            if v >= cut {
                let [i, j, k] = grid.spec.coords(idx);
                cloud.points.push(grid.spec.point(i, j, k));
                cloud.weights.push(v);
            }
        }
    }
    if cloud.is_empty() {
        return Err(Error::EmptySelection(threshold));
    }
    Ok(cloud)
}

/// Closed control mesh from the `threshold · max` level set of the
/// intensity: isosurface of the largest connected region, decimation to
/// about `target_vertices`, then one Laplacian smoothing pass.
pub fn initial_mesh(grid: &VoxelGrid, threshold: f64, target_vertices: usize) -> Result<ControlMesh> {
    check_threshold(threshold)?;
    let max = grid.intensity.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::EmptySelection(threshold));
    }
    let level = threshold * max;
    let inside = select_largest_component(&grid.spec, &grid.intensity, level)?;
    let (verts, faces) = isosurface(&grid.spec, &grid.intensity, &inside, level)?;
    let (verts, faces) = if verts.len() > target_vertices {
        decimate(verts, faces, target_vertices.max(4))
    } else {
        if verts.len() < target_vertices {
            warn!("isosurface has {} vertices, fewer than the requested {target_vertices}", verts.len());
        }
        (verts, faces)
    };
    let mesh = ControlMesh::new(verts, faces)?;
    let smoothed = laplacian_smooth(&mesh, 0.5);
    let out = mesh.with_positions(smoothed)?;
    out.check_geometry()?;
    if out.genus() != 0 {
        warn!("initial mesh has genus {}", out.genus());
    }
    Ok(out)
}

/// One umbrella smoothing step `p ← p + λ(mean(ring) − p)`.
pub fn laplacian_smooth(mesh: &ControlMesh, lambda: f64) -> Vec<Vec3> {
    let p = mesh.vertices();
    (0..mesh.num_vertices())
        .map(|v| {
            let ring = mesh.ring(v);
            let mean = ring.iter().map(|&u| p[u]).sum::<Vec3>() / ring.len() as f64;
            p[v] + (mean - p[v]) * lambda
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing_round_trips() {
        let s = GridSpec::new(Vec3::zeros(), 0.5, [3, 4, 5]).unwrap();
        for idx in 0..s.len() {
            let [i, j, k] = s.coords(idx);
            assert_eq!(s.index(i, j, k), idx);
        }
        assert!(GridSpec::new(Vec3::zeros(), 0.0, [3, 3, 3]).is_err());
        assert!(GridSpec::new(Vec3::zeros(), 1.0, [1, 3, 3]).is_err());
    }

    #[test]
    fn threshold_bounds() {
        let s = GridSpec::new(Vec3::zeros(), 1.0, [2, 2, 2]).unwrap();
        let g = VoxelGrid::from_intensity(s, vec![0.5; 8]).unwrap();
        assert!(extract_point_cloud(&g, 0.0).is_err());
        assert!(extract_point_cloud(&g, 1.0).is_err());
        assert_eq!(extract_point_cloud(&g, 0.3).unwrap().len(), 8);
        let z = VoxelGrid::from_intensity(s, vec![0.0; 8]).unwrap();
        assert!(matches!(extract_point_cloud(&z, 0.5), Err(Error::EmptySelection(_))));
    }
}
