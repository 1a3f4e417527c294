use std::fmt::Write as _;

use rand::Rng;

use super::traversal::{blocks_intersected, random_polyline, BlockIndex, Polyline};
use crate::error::{invalid, Error, Result};
use crate::rng::{splitmix64, stream_rng};

/// A block-indexed open/closed field.
pub trait OpenField: Sync {
    fn dim(&self) -> usize;
    fn delta(&self) -> f64;
    fn is_open(&self, idx: &[i64]) -> Result<bool>;
}

/// Materialised field on the box of block indices `lo + [0, shape)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PercSystem {
    dim: usize,
    delta: f64,
    lo: Vec<i64>,
    shape: Vec<usize>,
    open: Vec<bool>,
    classes: Option<Vec<u32>>,
    p: Option<f64>,
}

impl PercSystem {
    pub fn closed(dim: usize, delta: f64, lo: Vec<i64>, shape: Vec<usize>) -> Result<Self> {
        if !(1..=3).contains(&dim) || lo.len() != dim || shape.len() != dim {
            return invalid("dimension mismatch in percolation system");
        }
        if !(delta > 0.0) {
            return invalid("block scale must be positive");
        }
        let n = shape.iter().product();
        Ok(Self { dim, delta, lo, shape, open: vec![false; n], classes: None, p: None })
    }

    /// Homogeneous Bernoulli(p) field with independent blocks.
    pub fn bernoulli(dim: usize, delta: f64, lo: Vec<i64>, shape: Vec<usize>, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("p must lie in [0,1], got {p}"));
        }
        let mut sys = Self::closed(dim, delta, lo, shape)?;
        let mut rng = stream_rng(seed, 0);
        for v in sys.open.iter_mut() {
            *v = rng.random::<f64>() < p;
        }
        sys.p = Some(p);
        Ok(sys)
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn n_blocks(&self) -> usize {
        self.open.len()
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&v| v).count()
    }

    fn offset(&self, idx: &[i64]) -> Option<usize> {
        if idx.len() != self.dim {
            return None;
        }
        let mut off = 0usize;
        for ((&k, &lo), &n) in idx.iter().zip(&self.lo).zip(&self.shape) {
            let rel = k - lo;
            if rel < 0 || rel >= n as i64 {
                return None;
            }
            off = off * n + rel as usize;
        }
        Some(off)
    }

    pub fn contains(&self, idx: &[i64]) -> bool {
        self.offset(idx).is_some()
    }

    pub fn index_of(&self, off: usize) -> BlockIndex {
        let mut idx = vec![0; self.dim];
        let mut rem = off;
        for i in (0..self.dim).rev() {
            idx[i] = self.lo[i] + (rem % self.shape[i]) as i64;
            rem /= self.shape[i];
        }
        idx
    }

    pub fn indices(&self) -> impl Iterator<Item = BlockIndex> + '_ {
        (0..self.n_blocks()).map(|o| self.index_of(o))
    }

    pub fn set_open(&mut self, idx: &[i64], value: bool) -> Result<()> {
        let o = self.offset(idx).ok_or_else(|| Error::Domain(format!("{idx:?}")))?;
        self.open[o] = value;
        Ok(())
    }

    pub fn set_classes(&mut self, class_of: impl Fn(&[i64]) -> u32) {
        let classes = (0..self.n_blocks()).map(|o| class_of(&self.index_of(o))).collect();
        self.classes = Some(classes);
    }

    pub fn class_of(&self, idx: &[i64]) -> Option<u32> {
        let o = self.offset(idx)?;
        self.classes.as_ref().map(|c| c[o])
    }

    /// `i0,…,i{d-1},open,class` rows (corner coordinates in units of Δ).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let head: Vec<String> = (0..self.dim).map(|i| format!("k{i}")).collect();
        let _ = writeln!(s, "{},open,class", head.join(","));
        for o in 0..self.n_blocks() {
            let idx = self.index_of(o);
            let coords: Vec<String> = idx.iter().map(|v| (*v as f64 * self.delta).to_string()).collect();
            let class = self.classes.as_ref().map(|c| c[o].to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{}", coords.join(","), u8::from(self.open[o]), class);
        }
        s
    }

    /// Parse the output of [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str, delta: f64) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidArgument("empty csv".into()))?;
        let dim = header.split(',').count() - 2;
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != dim + 2 {
                return invalid(format!("bad row '{line}'"));
            }
            let idx: Vec<i64> = f[..dim]
                .iter()
                .map(|v| v.parse::<f64>().map(|c| (c / delta).round() as i64))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let open = f[dim] == "1";
            let class = f[dim + 1].parse::<u32>().ok();
            rows.push((idx, open, class));
        }
        if rows.is_empty() {
            return invalid("csv has no blocks");
        }
        let lo: Vec<i64> = (0..dim).map(|i| rows.iter().map(|r| r.0[i]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..dim).map(|i| rows.iter().map(|r| r.0[i]).max().unwrap()).collect();
        let shape = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
        let mut sys = Self::closed(dim, delta, lo, shape)?;
        let mut classes = vec![0u32; sys.n_blocks()];
        let mut any_class = false;
        for (idx, open, class) in rows {
            let o = sys.offset(&idx).expect("inside bounding box");
            sys.open[o] = open;
            if let Some(c) = class {
                classes[o] = c;
                any_class = true;
            }
        }
        if any_class {
            sys.classes = Some(classes);
        }
        Ok(sys)
    }
}

impl OpenField for PercSystem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn is_open(&self, idx: &[i64]) -> Result<bool> {
        self.offset(idx)
            .map(|o| self.open[o])
            .ok_or_else(|| Error::Domain(format!("block {idx:?} outside the materialised box")))
    }
}

/// Unbounded Bernoulli(p) field whose block states are hashed from `(seed, index)`.
#[derive(Debug, Clone, Copy)]
pub struct HashedBernoulli {
    pub dim: usize,
    pub delta: f64,
    pub p: f64,
    pub seed: u64,
}

impl OpenField for HashedBernoulli {
    fn dim(&self) -> usize {
        self.dim
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn is_open(&self, idx: &[i64]) -> Result<bool> {
        let mut h = splitmix64(self.seed);
        for &c in idx {
            h = splitmix64(h ^ c as u64);
        }
        Ok(((h >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < self.p)
    }
}

/// ψ(w): number of open blocks met by `w`.
pub fn psi(w: &Polyline, field: &dyn OpenField) -> Result<usize> {
    if w.dim() != field.dim() {
        return invalid("path and field dimensions differ");
    }
    let mut n = 0;
    for idx in blocks_intersected(w, field.delta())? {
        if field.is_open(&idx)? {
            n += 1;
        }
    }
    Ok(n)
}

/// Largest ψ over `n_paths` random polylines of length `ell` from the origin — a lower
/// bound on Ψ(ℓ). Paths leaving a materialised domain are skipped.
pub fn sampled_psi_lower_bound(field: &dyn OpenField, ell: f64, n_paths: usize, seed: u64) -> usize {
    let mut rng = stream_rng(seed, 0);
    let mut best = 0;
    for i in 0..n_paths {
        let segs = 1 + i % 4;
        let w = random_polyline(&mut rng, field.dim(), ell, segs);
        if let Ok(v) = psi(&w, field) {
            best = best.max(v);
        }
    }
    best
}
