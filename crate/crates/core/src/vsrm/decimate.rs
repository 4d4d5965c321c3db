//! Shortest-edge collapse decimation that keeps a closed manifold.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::mesh::Vec3;

struct State {
    pos: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vf: Vec<Vec<usize>>,
    alive: Vec<bool>,
    version: Vec<u32>,
}

impl State {
    fn neighbours(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vf[v].iter().flat_map(|&f| self.faces[f]).filter(|&u| u != v).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn normal(&self, t: [usize; 3], moved: &[(usize, Vec3)]) -> Vec3 {
        let p = |i: usize| moved.iter().find(|(v, _)| *v == i).map(|(_, q)| *q).unwrap_or(self.pos[i]);
        (p(t[1]) - p(t[0])).cross(&(p(t[2]) - p(t[0])))
    }

    fn try_collapse(&mut self, a: usize, b: usize) -> bool {
        let shared: Vec<usize> = self.vf[a].iter().copied().filter(|&f| self.faces[f].contains(&b)).collect();
        if shared.len() != 2 {
            return false;
        }
        let opposite: Vec<usize> = shared
            .iter()
            .map(|&f| *self.faces[f].iter().find(|&&v| v != a && v != b).unwrap())
            .collect();
        let na = self.neighbours(a);
        let nb = self.neighbours(b);
        let common: Vec<usize> = na.iter().copied().filter(|v| nb.binary_search(v).is_ok()).collect();
        if common.len() != 2 || !opposite.iter().all(|o| common.contains(o)) {
            return false;
        }
        if na.len() + nb.len() - 4 < 3 || opposite.iter().any(|&o| self.neighbours(o).len() <= 3) {
            return false;
        }
        let m = (self.pos[a] + self.pos[b]) * 0.5;
        let moved = [(a, m), (b, m)];
        for &f in self.vf[a].iter().chain(&self.vf[b]) {
            if shared.contains(&f) {
                continue;
            }
            let t = self.faces[f];
            let before = self.normal(t, &[]);
            let after = self.normal(t, &moved);
            if before.dot(&after) <= 0.2 * before.norm() * after.norm() || after.norm() <= 1e-12 * before.norm() {
                return false;
            }
        }
        for &f in &shared {
            self.face_alive[f] = false;
            for v in self.faces[f] {
                self.vf[v].retain(|&g| g != f);
            }
        }
        let moving = std::mem::take(&mut self.vf[b]);
        for f in moving {
            for v in self.faces[f].iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
            self.vf[a].push(f);
        }
        self.pos[a] = m;
        self.alive[b] = false;
        self.version[a] += 1;
        self.version[b] += 1;
        true
    }
}

type Entry = Reverse<(u64, usize, usize, u32, u32)>;

fn entry(s: &State, a: usize, b: usize) -> Entry {
    let len = (s.pos[a] - s.pos[b]).norm();
    Reverse((len.to_bits(), a, b, s.version[a], s.version[b]))
}

/// Collapse shortest edges (to midpoints) until `target` vertices remain
/// or no admissible collapse is left. Returns compacted arrays.
pub fn decimate(pos: Vec<Vec3>, faces: Vec<[usize; 3]>, target: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let nv = pos.len();
    let mut vf = vec![Vec::new(); nv];
    for (f, t) in faces.iter().enumerate() {
        for &v in t {
            vf[v].push(f);
        }
    }
    let nf = faces.len();
    let mut s = State { pos, faces, face_alive: vec![true; nf], vf, alive: vec![true; nv], version: vec![0; nv] };
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    for t in &s.faces {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if a < b {
                heap.push(entry(&s, a, b));
            }
        }
    }
    let mut count = nv;
    while count > target {
        let Some(Reverse((_, a, b, va, vb))) = heap.pop() else { break };
        if !s.alive[a] || !s.alive[b] || s.version[a] != va || s.version[b] != vb {
            continue;
        }
        if s.try_collapse(a, b) {
            count -= 1;
            for n in s.neighbours(a) {
                heap.push(entry(&s, a.min(n), a.max(n)));
            }
        }
    }
    let mut map = vec![usize::MAX; nv];
    let mut out_pos = Vec::with_capacity(count);
    for v in 0..nv {
        if s.alive[v] && !s.vf[v].is_empty() {
            map[v] = out_pos.len();
            out_pos.push(s.pos[v]);
        }
    }
    let out_faces = s
        .faces
        .iter()
        .zip(&s.face_alive)
        .filter(|(_, &alive)| alive)
        .map(|(t, _)| t.map(|v| map[v]))
        .collect();
    (out_pos, out_faces)
}
