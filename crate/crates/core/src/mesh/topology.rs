use std::collections::HashMap;

/// Half-edge lookup over an oriented triangle list.
///
/// Works for closed meshes and for the open local regions used during
/// patch refinement; ring queries return `None` when a fan is not closed.
#[derive(Debug, Clone, Default)]
pub(crate) struct HalfEdges {
    map: HashMap<(usize, usize), usize>,
}

impl HalfEdges {
    pub(crate) fn new(faces: &[[usize; 3]]) -> Self {
        let mut map = HashMap::with_capacity(faces.len() * 3);
        for (f, t) in faces.iter().enumerate() {
            for k in 0..3 {
                map.insert((t[k], t[(k + 1) % 3]), f);
            }
        }
        Self { map }
    }

    /// Face owning the directed edge `a -> b`.
    pub(crate) fn face(&self, a: usize, b: usize) -> Option<usize> {
        self.map.get(&(a, b)).copied()
    }

    /// Counterclockwise one-ring of `v` starting at neighbour `start`.
    pub(crate) fn ring_from(
        &self,
        faces: &[[usize; 3]],
        v: usize,
        start: usize,
    ) -> Option<Vec<usize>> {
        let mut ring = Vec::with_capacity(8);
        let mut cur = start;
        loop {
            ring.push(cur);
            let f = self.face(v, cur)?;
            let next = third(&faces[f], v, cur);
            if next == start {
                return Some(ring);
            }
            if ring.len() > faces.len() {
                return None;
            }
            cur = next;
        }
    }
}

/// The vertex of `tri` that is neither `a` nor `b`.
pub(crate) fn third(tri: &[usize; 3], a: usize, b: usize) -> usize {
    tri.iter()
        .copied()
        .find(|&x| x != a && x != b)
        .expect("triangle has three distinct vertices")
}

/// Rotate a cyclic ring so it starts at `start`.
pub(crate) fn rotate_to(ring: &[usize], start: usize) -> Option<Vec<usize>> {
    let pos = ring.iter().position(|&x| x == start)?;
    Some(ring[pos..].iter().chain(&ring[..pos]).copied().collect())
}

/// Ordered patch stencil from the three corner rings.
///
/// Corners first in face order, then the outer ring counterclockwise,
/// starting at the vertex across edge `c0 -> c1`. Each ring must be the
/// CCW ring of the corner; duplicates are dropped keeping first occurrence.
pub(crate) fn stencil_from_rings(
    corners: [usize; 3],
    ring0: &[usize],
    ring1: &[usize],
    ring2: &[usize],
) -> Option<Vec<usize>> {
    let [c0, c1, c2] = corners;
    // ring(c1) from c2: c2, c0, <extras...>
    let r1 = rotate_to(ring1, c2)?;
    // ring(c2) from c0: c0, c1, <extras...>
    let r2 = rotate_to(ring2, c0)?;
    // ring(c0) from c1: c1, c2, <extras...>
    let r0 = rotate_to(ring0, c1)?;
    let mut out = Vec::with_capacity(ring0.len() + ring1.len() + ring2.len());
    for v in [c0, c1, c2]
        .into_iter()
        .chain(r1.into_iter().skip(2))
        .chain(r2.into_iter().skip(2))
        .chain(r0.into_iter().skip(2))
    {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Some(out)
}

/// Positional 12-vertex stencil of a patch whose corners all have valence
/// 6, in box-spline lattice order. Unlike [`stencil_from_rings`], a vertex
/// reached at two lattice positions (tiny or periodic meshes) is repeated.
pub(crate) fn regular_stencil(
    corners: [usize; 3],
    ring0: &[usize],
    ring1: &[usize],
    ring2: &[usize],
) -> Option<[usize; 12]> {
    let [c0, c1, c2] = corners;
    if ring0.len() != 6 || ring1.len() != 6 || ring2.len() != 6 {
        return None;
    }
    let r1 = rotate_to(ring1, c2)?;
    let r2 = rotate_to(ring2, c0)?;
    let r0 = rotate_to(ring0, c1)?;
    Some([c0, c1, c2, r1[2], r1[3], r1[4], r1[5], r2[3], r2[4], r2[5], r0[3], r0[4]])
}
