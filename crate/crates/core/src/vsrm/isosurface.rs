//! Level sets on the Freudenthal (Kuhn) triangulation of a voxel grid.
//!
//! Each cube is split into six tetrahedra sharing the main diagonal, so
//! the triangulation is consistent across cubes and the level set of the
//! piecewise-linear interpolant is a closed 2-manifold.

use std::collections::{HashMap, VecDeque};

use log::warn;

use super::GridSpec;
use crate::error::{Error, Result};
use crate::mesh::Vec3;

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Edge directions of the triangulation (one sign).
const EDGES: [[i64; 3]; 7] = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]];

fn neighbours(spec: &GridSpec, idx: usize) -> impl Iterator<Item = usize> + '_ {
    let [i, j, k] = spec.coords(idx).map(|x| x as i64);
    let dims = spec.dims.map(|x| x as i64);
    EDGES.iter().flat_map(move |e| {
        [1i64, -1].into_iter().filter_map(move |s| {
            let (a, b, c) = (i + s * e[0], j + s * e[1], k + s * e[2]);
            (a >= 0 && b >= 0 && c >= 0 && a < dims[0] && b < dims[1] && c < dims[2])
                .then(|| spec.index(a as usize, b as usize, c as usize))
        })
    })
}

fn on_boundary(spec: &GridSpec, idx: usize) -> bool {
    let c = spec.coords(idx);
    (0..3).any(|a| c[a] == 0 || c[a] + 1 == spec.dims[a])
}

fn flood(spec: &GridSpec, seeds: impl Iterator<Item = usize>, allowed: impl Fn(usize) -> bool, mark: &mut [bool]) -> usize {
    let mut queue: VecDeque<usize> = VecDeque::new();
    for s in seeds {
        if !mark[s] && allowed(s) {
            mark[s] = true;
            queue.push_back(s);
        }
    }
    let mut count = 0;
    while let Some(v) = queue.pop_front() {
        count += 1;
        for n in neighbours(spec, v) {
            if !mark[n] && allowed(n) {
                mark[n] = true;
                queue.push_back(n);
            }
        }
    }
    count
}

/// Mask of the largest connected region with intensity ≥ `level`, with
/// enclosed cavities filled.
pub fn select_largest_component(spec: &GridSpec, intensity: &[f64], level: f64) -> Result<Vec<bool>> {
    let n = spec.len();
    let above = |i: usize| intensity[i] >= level;
    let mut label = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX || !above(s) {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        let mut queue = VecDeque::from([s]);
        label[s] = id;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for u in neighbours(spec, v) {
                if label[u] == usize::MAX && above(u) {
                    label[u] = id;
                    queue.push_back(u);
                }
            }
        }
        sizes.push(size);
    }
    if sizes.is_empty() {
        return Err(Error::EmptySelection(level));
    }
    let best = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap();
    if sizes.len() > 1 {
        warn!("{} disconnected regions above the threshold; meshing the largest ({} voxels)", sizes.len(), sizes[best]);
    }
    let inside: Vec<bool> = label.iter().map(|&l| l == best).collect();
    if (0..n).any(|i| inside[i] && on_boundary(spec, i)) {
        return Err(Error::IsosurfaceOpen);
    }
    let mut outside = vec![false; n];
    flood(spec, (0..n).filter(|&i| on_boundary(spec, i)), |i| !inside[i], &mut outside);
    Ok(outside.into_iter().map(|o| !o).collect())
}

/// Triangulated boundary of `inside`, with vertices on triangulation edges
/// placed by linear interpolation of `intensity` at `level`. Faces are
/// oriented with normals pointing out of the region.
pub fn isosurface(spec: &GridSpec, intensity: &[f64], inside: &[bool], level: f64) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut verts: Vec<Vec3> = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces = Vec::new();
    let mut vertex_on = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
        // a inside, b outside
        *index.entry((a, b)).or_insert_with(|| {
            let (va, vb) = (intensity[a], intensity[b]);
            let t = if va >= level && vb < level { (va - level) / (va - vb) } else { 0.5 };
            let t = t.clamp(0.02, 0.98);
            let [ia, ja, ka] = spec.coords(a);
            let [ib, jb, kb] = spec.coords(b);
            let pa = spec.point(ia, ja, ka);
            let pb = spec.point(ib, jb, kb);
            verts.push(pa + (pb - pa) * t);
            verts.len() - 1
        })
    };
    let [nx, ny, nz] = spec.dims;
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let corner = |c: [usize; 3]| spec.index(i + c[0], j + c[1], k + c[2]);
                let cube_any = (0..8).map(|b| corner([b & 1, (b >> 1) & 1, b >> 2])).fold((false, false), |(a, o), v| {
                    (a || inside[v], o || !inside[v])
                });
                if !(cube_any.0 && cube_any.1) {
                    continue;
                }
                for p in PERMS {
                    let mut c = [0usize; 3];
                    let mut tet = [corner(c); 4];
                    for (s, &axis) in p.iter().enumerate() {
                        c[axis] = 1;
                        tet[s + 1] = corner(c);
                    }
                    let ins: Vec<usize> = tet.iter().copied().filter(|&v| inside[v]).collect();
                    let outs: Vec<usize> = tet.iter().copied().filter(|&v| !inside[v]).collect();
                    let mut emit = |tri: [usize; 3], verts: &mut Vec<Vec3>, a: usize, b: usize| {
                        let [p0, p1, p2] = tri.map(|x| verts[x]);
                        let n = (p1 - p0).cross(&(p2 - p0));
                        let [ia, ja, ka] = spec.coords(a);
                        let [ib, jb, kb] = spec.coords(b);
                        let g = spec.point(ib, jb, kb) - spec.point(ia, ja, ka);
                        faces.push(if n.dot(&g) >= 0.0 { tri } else { [tri[0], tri[2], tri[1]] });
                    };
                    match (ins.len(), outs.len()) {
                        (1, 3) => {
                            let a = ins[0];
                            let t = [0, 1, 2].map(|s| vertex_on(a, outs[s], &mut verts));
                            emit(t, &mut verts, a, outs[0]);
                        }
                        (3, 1) => {
                            let b = outs[0];
                            let t = [0, 1, 2].map(|s| vertex_on(ins[s], b, &mut verts));
                            emit(t, &mut verts, ins[0], b);
                        }
                        (2, 2) => {
                            let e00 = vertex_on(ins[0], outs[0], &mut verts);
                            let e01 = vertex_on(ins[0], outs[1], &mut verts);
                            let e11 = vertex_on(ins[1], outs[1], &mut verts);
                            let e10 = vertex_on(ins[1], outs[0], &mut verts);
                            emit([e00, e01, e11], &mut verts, ins[0], outs[0]);
                            emit([e00, e11, e10], &mut verts, ins[1], outs[0]);
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    if faces.is_empty() {
        return Err(Error::EmptySelection(level));
    }
    Ok((verts, faces))
}
