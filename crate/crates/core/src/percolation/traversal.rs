use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{invalid, Result};

/// Piecewise-linear path in ℝ^d, d ∈ {1, 2, 3}.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    dim: usize,
    coords: Vec<f64>,
}

/// Index of the half-open block `Π [kᵢΔ, (kᵢ+1)Δ)`; its corner is `Δ·index`.
pub type BlockIndex = Vec<i64>;

impl Polyline {
    pub fn new(dim: usize, vertices: &[Vec<f64>]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return invalid(format!("dimension must be 1, 2 or 3, got {dim}"));
        }
        if vertices.is_empty() {
            return invalid("a polyline needs at least one vertex");
        }
        let mut coords = Vec::with_capacity(dim * vertices.len());
        for v in vertices {
            if v.len() != dim || v.iter().any(|c| !c.is_finite()) {
                return invalid("vertex of wrong dimension or non-finite");
            }
            coords.extend_from_slice(v);
        }
        Ok(Self { dim, coords })
    }

    pub fn planar(points: &[(f64, f64)]) -> Result<Self> {
        let v: Vec<Vec<f64>> = points.iter().map(|&(a, b)| vec![a, b]).collect();
        Self::new(2, &v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    pub fn length(&self) -> f64 {
        (1..self.n_vertices()).map(|i| dist(self.vertex(i - 1), self.vertex(i))).sum()
    }

    pub fn starts_at_origin(&self) -> bool {
        self.vertex(0).iter().all(|&c| c == 0.0)
    }

    /// Translate every vertex by `offset`.
    pub fn shifted(&self, offset: &[f64]) -> Self {
        let coords = self.coords.chunks(self.dim).flat_map(|v| v.iter().zip(offset).map(|(a, b)| a + b)).collect();
        Self { dim: self.dim, coords }
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Index of the block containing point `p`.
pub fn block_of(p: &[f64], delta: f64) -> BlockIndex {
    p.iter().map(|&c| (c / delta).floor() as i64).collect()
}

/// All half-open Δ-blocks met by the polyline (grid traversal per segment).
///
/// Within a segment, crossings are processed in parameter order; when several axes cross at
/// the same parameter, increasing-coordinate crossings take effect at the crossing point
/// (the boundary belongs to the upper block) and decreasing ones just after it.
pub fn blocks_intersected(w: &Polyline, delta: f64) -> Result<BTreeSet<BlockIndex>> {
    if !(delta > 0.0) {
        return invalid(format!("block scale must be positive, got {delta}"));
    }
    let mut out = BTreeSet::new();
    out.insert(block_of(w.vertex(0), delta));
    for i in 1..w.n_vertices() {
        segment_blocks(w.vertex(i - 1), w.vertex(i), delta, &mut out);
    }
    Ok(out)
}

fn segment_blocks(a: &[f64], b: &[f64], delta: f64, out: &mut BTreeSet<BlockIndex>) {
    let d = a.len();
    let mut cell = block_of(a, delta);
    let target = block_of(b, delta);
    let dir: Vec<i64> = (0..d).map(|i| (target[i] - cell[i]).signum()).collect();
    let cross = |i: usize, c: i64| -> f64 {
        let boundary = if dir[i] > 0 { (c + 1) as f64 * delta } else { c as f64 * delta };
        ((boundary - a[i]) / (b[i] - a[i])).clamp(0.0, 1.0)
    };
    let mut next: Vec<f64> = (0..d).map(|i| if dir[i] != 0 { cross(i, cell[i]) } else { f64::INFINITY }).collect();
    out.insert(cell.clone());
    loop {
        let tmin = (0..d).filter(|&i| cell[i] != target[i]).map(|i| next[i]).fold(f64::INFINITY, f64::min);
        if tmin == f64::INFINITY {
            break;
        }
        let mut moved = false;
        for i in 0..d {
            if cell[i] != target[i] && dir[i] > 0 && next[i] == tmin {
                cell[i] += 1;
                next[i] = cross(i, cell[i]);
                moved = true;
            }
        }
        if moved {
            out.insert(cell.clone());
        }
        moved = false;
        for i in 0..d {
            if cell[i] != target[i] && dir[i] < 0 && next[i] == tmin {
                cell[i] -= 1;
                next[i] = cross(i, cell[i]);
                moved = true;
            }
        }
        if moved {
            out.insert(cell.clone());
        }
    }
}

/// Random polyline from the origin with `segments` pieces and total length exactly `ell`.
pub fn random_polyline<R: Rng>(rng: &mut R, dim: usize, ell: f64, segments: usize) -> Polyline {
    let segments = segments.max(1);
    let mut cuts: Vec<f64> = (0..segments - 1).map(|_| rng.random::<f64>()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    let mut pos = vec![0.0; dim];
    let mut verts = vec![pos.clone()];
    for w in cuts.windows(2) {
        let len = (w[1] - w[0]) * ell;
        let dirv = random_unit(rng, dim);
        for (p, u) in pos.iter_mut().zip(&dirv) {
            *p += len * u;
        }
        verts.push(pos.clone());
    }
    Polyline::new(dim, &verts).expect("valid dimension")
}

fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[&[i64]]) -> BTreeSet<BlockIndex> {
        v.iter().map(|x| x.to_vec()).collect()
    }

    #[test]
    fn examples() {
        let p = Polyline::planar(&[(0.0, 0.0)]).unwrap();
        assert_eq!(blocks_intersected(&p, 1.0).unwrap(), set(&[&[0, 0]]));
        let s = Polyline::planar(&[(0.0, 0.0), (1.5, 0.5)]).unwrap();
        assert_eq!(blocks_intersected(&s, 1.0).unwrap(), set(&[&[0, 0], &[1, 0]]));
        let ax = Polyline::planar(&[(0.0, 0.0), (0.0, 2.5)]).unwrap();
        assert_eq!(blocks_intersected(&ax, 4.0 / 4.0).unwrap().len(), 3);
    }

    #[test]
    fn corner_conventions() {
        // diagonal through a grid corner skips the two side blocks
        let up = Polyline::planar(&[(0.5, 0.5), (1.5, 1.5)]).unwrap();
        assert_eq!(blocks_intersected(&up, 1.0).unwrap(), set(&[&[0, 0], &[1, 1]]));
        // the anti-diagonal: the corner point belongs to block (1,1)
        let down = Polyline::planar(&[(0.5, 1.5), (1.5, 0.5)]).unwrap();
        assert_eq!(blocks_intersected(&down, 1.0).unwrap(), set(&[&[0, 1], &[1, 1], &[1, 0]]));
        let back = Polyline::planar(&[(1.5, 1.5), (0.5, 0.5)]).unwrap();
        assert_eq!(blocks_intersected(&back, 1.0).unwrap(), set(&[&[1, 1], &[0, 0]]));
        // ending exactly on a boundary while moving down stays in the upper block
        let stop = Polyline::planar(&[(0.5, 0.5), (-0.0, 0.5)]).unwrap();
        assert_eq!(blocks_intersected(&stop, 1.0).unwrap(), set(&[&[0, 0]]));
        let stop2 = Polyline::planar(&[(0.5, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(blocks_intersected(&stop2, 1.0).unwrap(), set(&[&[0, 0], &[1, 0]]));
        // negative side
        let neg = Polyline::planar(&[(0.0, 0.0), (-0.5, -0.5)]).unwrap();
        assert_eq!(blocks_intersected(&neg, 1.0).unwrap(), set(&[&[0, 0], &[-1, -1]]));
    }

    #[test]
    fn one_and_three_dimensions() {
        let p = Polyline::new(1, &[vec![0.0], vec![2.0], vec![-1.5]]).unwrap();
        assert_eq!(blocks_intersected(&p, 1.0).unwrap(), set(&[&[-2], &[-1], &[0], &[1], &[2]]));
        let q = Polyline::new(3, &[vec![0.5, 0.5, 0.5], vec![1.5, 1.5, 1.5]]).unwrap();
        assert_eq!(blocks_intersected(&q, 1.0).unwrap(), set(&[&[0, 0, 0], &[1, 1, 1]]));
        assert!(Polyline::new(4, &[vec![0.0; 4]]).is_err());
    }

    #[test]
    fn random_polyline_has_requested_length() {
        let mut rng = crate::rng::stream_rng(1, 0);
        for _ in 0..100 {
            let p = random_polyline(&mut rng, 2, 3.7, 4);
            assert!((p.length() - 3.7).abs() < 1e-9);
            assert!(p.starts_at_origin());
        }
    }
}
