//! Geometric error metrics on limit surfaces.

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{ControlMesh, Vec3};
use crate::subdivision::{BarycentricPoint, SurfaceBasis, TriangleQuadrature};

/// `|A_c − A_r| / A_r` with limit-surface areas by degree-4 quadrature.
pub fn surface_area_error(candidate: &ControlMesh, reference: &ControlMesh) -> Result<f64> {
    let q = TriangleQuadrature::new(4)?;
    let ac = SurfaceBasis::new(candidate).area(candidate, &q)?;
    let ar = SurfaceBasis::new(reference).area(reference, &q)?;
    Ok((ac - ar).abs() / ar)
}

/// Dense triangulation of a limit surface: each patch is split into
/// `m²` triangles on a uniform parameter lattice.
#[derive(Debug, Clone)]
pub struct SampledSurface {
    pub points: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl SampledSurface {
    /// Lattice fine enough for at least `samples_per_patch` points per patch.
    pub fn new(mesh: &ControlMesh, samples_per_patch: usize) -> Result<Self> {
        let mut m = 1;
        while (m + 1) * (m + 2) / 2 < samples_per_patch.max(3) {
            m += 1;
        }
        Self::with_lattice(mesh, &SurfaceBasis::new(mesh), m)
    }

    pub fn with_lattice(mesh: &ControlMesh, basis: &SurfaceBasis, m: usize) -> Result<Self> {
        let per = (m + 1) * (m + 2) / 2;
        let id = |i: usize, j: usize| -> usize {
            // row j has m + 1 − j points
            j * (m + 1) - j * (j.saturating_sub(1)) / 2 + i
        };
        let patches: Vec<Vec<Vec3>> = (0..mesh.num_faces())
            .into_par_iter()
            .map(|f| {
                let mut pts = Vec::with_capacity(per);
                for j in 0..=m {
                    for i in 0..=m - j {
                        let p = BarycentricPoint::new(i as f64 / m as f64, j as f64 / m as f64)?;
                        let s = basis.sample(f, p);
                        pts.push(basis.tangents(f, &s, mesh.vertices()).0);
                    }
                }
                Ok(pts)
            })
            .collect::<Result<_>>()?;
        let mut points = Vec::with_capacity(per * patches.len());
        let mut triangles = Vec::new();
        for pts in patches {
            let base = points.len();
            points.extend(pts);
            for j in 0..m {
                for i in 0..m - j {
                    triangles.push([base + id(i, j), base + id(i + 1, j), base + id(i, j + 1)]);
                    if i + j + 1 < m {
                        triangles.push([base + id(i + 1, j), base + id(i + 1, j + 1), base + id(i, j + 1)]);
                    }
                }
            }
        }
        Ok(Self { points, triangles })
    }
}

/// Closest point on triangle `abc` to `p`.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Uniform bucket grid over triangles for closest-point queries.
pub struct TriangleGrid<'a> {
    surf: &'a SampledSurface,
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl<'a> TriangleGrid<'a> {
    pub fn new(surf: &'a SampledSurface) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &surf.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let mean_edge = surf
            .triangles
            .iter()
            .map(|t| (surf.points[t[0]] - surf.points[t[1]]).norm())
            .sum::<f64>()
            / surf.triangles.len().max(1) as f64;
        let ext = hi - lo;
        let mut cell = (2.0 * mean_edge).max(1e-12);
        // keep the grid a manageable size
        while ext.iter().map(|e| (e / cell).floor() as usize + 1).product::<usize>() > 4 * surf.triangles.len() + 64 {
            cell *= 1.5;
        }
        let dims = [0, 1, 2].map(|a| (ext[a] / cell).floor() as usize + 1);
        let mut cells = vec![Vec::new(); dims.iter().product()];
        for (t, tri) in surf.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| surf.points[i]);
            let tlo = a.inf(&b).inf(&c);
            let thi = a.sup(&b).sup(&c);
            let i0 = [0, 1, 2].map(|k| (((tlo[k] - lo[k]) / cell).floor() as usize).min(dims[k] - 1));
            let i1 = [0, 1, 2].map(|k| (((thi[k] - lo[k]) / cell).floor() as usize).min(dims[k] - 1));
            for z in i0[2]..=i1[2] {
                for y in i0[1]..=i1[1] {
                    for x in i0[0]..=i1[0] {
                        cells[x + dims[0] * (y + dims[1] * z)].push(t as u32);
                    }
                }
            }
        }
        Self { surf, lo, cell, dims, cells }
    }

    /// Closest point on the triangulation and its distance.
    pub fn closest(&self, p: &Vec3) -> (Vec3, f64) {
        let c = [0, 1, 2].map(|k| ((p[k] - self.lo[k]) / self.cell).floor() as i64);
        let mut best = (Vec3::zeros(), f64::INFINITY);
        let max_r = *self.dims.iter().max().unwrap() as i64 + c.iter().map(|x| x.abs()).max().unwrap() + 1;
        for r in 0..=max_r {
            // cells on the shell at Chebyshev radius r
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        let (x, y, z) = (c[0] + dx, c[1] + dy, c[2] + dz);
                        if x < 0 || y < 0 || z < 0 {
                            continue;
                        }
                        let (x, y, z) = (x as usize, y as usize, z as usize);
                        if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
                            continue;
                        }
                        for &t in &self.cells[x + self.dims[0] * (y + self.dims[1] * z)] {
                            let [a, b, cc] = self.surf.triangles[t as usize].map(|i| self.surf.points[i]);
                            let q = closest_point_on_triangle(p, &a, &b, &cc);
                            let d = (q - p).norm();
                            if d < best.1 {
                                best = (q, d);
                            }
                        }
                    }
                }
            }
            // anything beyond this shell is at least r·cell away
            if best.1 <= r as f64 * self.cell {
                break;
            }
        }
        best
    }
}

fn one_sided(points: &[Vec3], grid: &TriangleGrid) -> f64 {
    points.par_iter().map(|p| grid.closest(p).1).reduce(|| 0.0, f64::max)
}

/// Symmetric discrete Hausdorff distance between the limit surfaces: the
/// larger of the two one-sided maxima of sample-to-surface distances.
pub fn hausdorff_distance(candidate: &ControlMesh, reference: &ControlMesh, samples_per_patch: usize) -> Result<f64> {
    let a = SampledSurface::new(candidate, samples_per_patch)?;
    let b = SampledSurface::new(reference, samples_per_patch)?;
    let ga = TriangleGrid::new(&a);
    let gb = TriangleGrid::new(&b);
    Ok(one_sided(&a.points, &gb).max(one_sided(&b.points, &ga)))
}
