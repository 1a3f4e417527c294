//! Test-only oracles that share no code with the library.

#![allow(dead_code)]

use std::collections::{BinaryHeap, HashMap};

use ssepwalk::percolation::{OpenField, PercSystem};

/// Exhaustive grid-path enumeration of the sup of ψ on a planar box of blocks.
///
/// Paths are polylines from the origin whose vertices lie on the lattice `(Δ/refine)ℤ²`
/// inside the closed domain; a block counts when its closed square meets the path. Best-first
/// search over (vertex, touched-open-set) keeps the shortest length per state, so every
/// reachable state with length ≤ ℓ is found.
pub struct GridPaths {
    lo: [i64; 2],
    shape: [usize; 2],
    delta: f64,
    verts: Vec<[f64; 2]>,
    origin: usize,
    /// blocks whose closure contains the vertex
    at: Vec<u32>,
    /// blocks whose closure meets segment (i, j); only pairs up to `reach` apart
    seg: HashMap<(usize, usize), u32>,
}

const TOL: f64 = 1e-9;

fn seg_meets_box(a: [f64; 2], b: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> bool {
    // Liang–Barsky clip of a + u(b − a), u ∈ [0, 1]
    let (mut u0, mut u1) = (0.0f64, 1.0f64);
    for c in 0..2 {
        let d = b[c] - a[c];
        let (l, h) = (lo[c] - TOL, hi[c] + TOL);
        if d.abs() < 1e-15 {
            if a[c] < l || a[c] > h {
                return false;
            }
            continue;
        }
        let (mut t0, mut t1) = ((l - a[c]) / d, (h - a[c]) / d);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        u0 = u0.max(t0);
        u1 = u1.min(t1);
        if u0 > u1 {
            return false;
        }
    }
    true
}

impl GridPaths {
    pub fn new(lo: [i64; 2], shape: [usize; 2], delta: f64, refine: usize, reach: f64) -> Self {
        assert!(shape[0] * shape[1] <= 32);
        let h = delta / refine as f64;
        let nx = shape[0] * refine + 1;
        let ny = shape[1] * refine + 1;
        let mut verts = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                verts.push([lo[0] as f64 * delta + i as f64 * h, lo[1] as f64 * delta + j as f64 * h]);
            }
        }
        let origin = verts.iter().position(|v| v[0].abs() < 1e-12 && v[1].abs() < 1e-12).expect("origin on the lattice");
        let boxes: Vec<([f64; 2], [f64; 2])> = (0..shape[0] * shape[1])
            .map(|b| {
                let (i, j) = (b / shape[1], b % shape[1]);
                let x = (lo[0] + i as i64) as f64 * delta;
                let y = (lo[1] + j as i64) as f64 * delta;
                ([x, y], [x + delta, y + delta])
            })
            .collect();
        let mask = |a: [f64; 2], b: [f64; 2]| {
            boxes.iter().enumerate().filter(|(_, bx)| seg_meets_box(a, b, bx.0, bx.1)).fold(0u32, |m, (k, _)| m | 1 << k)
        };
        let at = verts.iter().map(|&v| mask(v, v)).collect();
        let mut seg = HashMap::new();
        for i in 0..verts.len() {
            for j in 0..verts.len() {
                if i != j && dist(verts[i], verts[j]) <= reach + TOL {
                    seg.insert((i, j), mask(verts[i], verts[j]));
                }
            }
        }
        Self { lo, shape, delta, verts, origin, at, seg }
    }

    fn block_bit(&self, idx: &[i64]) -> u32 {
        let i = (idx[0] - self.lo[0]) as usize;
        let j = (idx[1] - self.lo[1]) as usize;
        1 << (i * self.shape[1] + j)
    }

    /// Max number of open blocks met by a lattice path of length ≤ ℓ.
    pub fn sup(&self, ell: f64, sys: &PercSystem) -> usize {
        let open: u32 = sys.indices().filter(|i| sys.is_open(i).unwrap()).fold(0, |m, i| m | self.block_bit(&i));
        let start = (self.origin, self.at[self.origin] & open);
        let mut best: HashMap<(usize, u32), f64> = HashMap::new();
        best.insert(start, 0.0);
        let mut heap = BinaryHeap::new();
        heap.push(Entry(0.0, start.0, start.1));
        let mut out = 0;
        while let Some(Entry(len, v, m)) = heap.pop() {
            if best.get(&(v, m)).is_some_and(|&b| b < len) {
                continue;
            }
            out = out.max(m.count_ones() as usize);
            for w in 0..self.verts.len() {
                let Some(&sm) = self.seg.get(&(v, w)) else { continue };
                let nl = len + dist(self.verts[v], self.verts[w]);
                if nl > ell + TOL * self.delta {
                    continue;
                }
                let nm = m | (sm & open);
                let key = (w, nm);
                if best.get(&key).is_none_or(|&b| nl < b - 1e-12) {
                    best.insert(key, nl);
                    heap.push(Entry(nl, w, nm));
                }
            }
        }
        out
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[derive(PartialEq)]
struct Entry(f64, usize, u32);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Entry {
    // min-heap on length
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1)).then(o.2.cmp(&self.2))
    }
}
