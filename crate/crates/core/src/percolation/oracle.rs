//! Exact sup of ψ over short paths on a small materialised domain.
//!
//! A path of length ≤ ℓ from the origin can meet a set S of blocks iff some ordering of S
//! admits a tour from the origin touching each block's closure in turn with total length
//! ≤ ℓ. Touching the closure rather than the half-open block makes the value the right limit
//! Ψ(ℓ⁺); it differs from Ψ(ℓ) only when the optimum is exactly ℓ and ends on an upper face.
//!
//! The search is a depth-first enumeration of orderings with an optimistic bound; each
//! ordering's minimal tour is a small convex problem solved by smoothed coordinate descent.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::system::{OpenField, PercSystem};
use super::traversal::Polyline;
use crate::error::{Error, Result};

pub const MAX_ORACLE_BLOCKS: usize = 1000;

/// Slack on `L* ≤ ℓ`, relative to Δ.
const TOUR_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: usize,
    pub tour_length: f64,
    pub blocks: Vec<Vec<i64>>,
    #[serde(skip)]
    pub witness: Option<Polyline>,
}

/// Reusable oracle for one domain shape; tour lengths are cached per block ordering, so
/// many samples on the same box share work.
pub struct SupOracle {
    dim: usize,
    delta: f64,
    lo: Vec<i64>,
    shape: Vec<usize>,
    cache: Mutex<HashMap<Vec<u16>, f64>>,
}

struct Search<'a> {
    oracle: &'a SupOracle,
    ell: f64,
    boxes: Vec<(Vec<f64>, Vec<f64>)>,
    ids: Vec<usize>,
    best: usize,
    best_seq: Vec<usize>,
    best_len: f64,
}

impl SupOracle {
    pub fn new(sys: &PercSystem) -> Result<Self> {
        if sys.n_blocks() > MAX_ORACLE_BLOCKS {
            return Err(Error::Resource(format!(
                "{} blocks exceed the oracle limit of {MAX_ORACLE_BLOCKS}; use sampled lower bounds",
                sys.n_blocks()
            )));
        }
        if !(1..=2).contains(&sys.dim()) {
            return Err(Error::Domain(format!("sup oracle supports d in {{1,2}}, got {}", sys.dim())));
        }
        Ok(Self {
            dim: sys.dim(),
            delta: sys.delta(),
            lo: sys.lo().to_vec(),
            shape: sys.shape().to_vec(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn compatible(&self, sys: &PercSystem) -> bool {
        sys.dim() == self.dim && sys.delta() == self.delta && sys.lo() == self.lo && sys.shape() == self.shape
    }

    /// Ψ(ℓ⁺) restricted to the domain, with a witness polyline.
    pub fn sup(&self, ell: f64, sys: &PercSystem) -> Result<OracleResult> {
        if !self.compatible(sys) {
            return Err(Error::InvalidArgument("system does not match the oracle's domain".into()));
        }
        if !(ell >= 0.0) || !ell.is_finite() {
            return Err(Error::InvalidArgument(format!("path length must be finite and >= 0, got {ell}")));
        }
        let open: Vec<usize> = (0..sys.n_blocks()).filter(|&o| sys.is_open(&sys.index_of(o)).unwrap_or(false)).collect();
        let boxes: Vec<(Vec<f64>, Vec<f64>)> = open
            .iter()
            .map(|&o| {
                let idx = sys.index_of(o);
                let lo: Vec<f64> = idx.iter().map(|&k| k as f64 * self.delta).collect();
                let hi: Vec<f64> = lo.iter().map(|v| v + self.delta).collect();
                (lo, hi)
            })
            .collect();
        let mut s = Search { oracle: self, ell, boxes, ids: open.clone(), best: 0, best_seq: vec![], best_len: 0.0 };
        let mut seq = Vec::new();
        let mut used = vec![false; open.len()];
        s.dfs(&mut seq, &mut used, 0.0);
        let blocks = s.best_seq.iter().map(|&i| sys.index_of(open[i])).collect();
        let witness = s.witness();
        Ok(OracleResult { value: s.best, tour_length: s.best_len, blocks, witness: Some(witness) })
    }

    fn tour(&self, key: Vec<u16>, boxes: &[&(Vec<f64>, Vec<f64>)]) -> f64 {
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return v;
        }
        let (len, _) = min_tour(self.dim, self.delta, boxes);
        self.cache.lock().expect("cache lock").insert(key, len);
        len
    }
}

impl Search<'_> {
    fn dfs(&mut self, seq: &mut Vec<usize>, used: &mut [bool], len: f64) {
        if seq.len() > self.best {
            self.best = seq.len();
            self.best_seq = seq.clone();
            self.best_len = len;
        }
        let slack = self.ell - len + TOUR_TOL * self.oracle.delta;
        // optimistic bound: blocks reachable from the last block within the remaining budget
        let reach: Vec<usize> = (0..self.boxes.len())
            .filter(|&j| !used[j])
            .filter(|&j| {
                let d = match seq.last() {
                    Some(&i) => box_box_dist(&self.boxes[i], &self.boxes[j]),
                    None => point_box_dist(&vec![0.0; self.oracle.dim], &self.boxes[j]),
                };
                d <= slack
            })
            .collect();
        if seq.len() + reach.len() <= self.best {
            return;
        }
        for j in reach {
            seq.push(j);
            let key: Vec<u16> = seq.iter().map(|&i| self.ids[i] as u16).collect();
            let bx: Vec<&(Vec<f64>, Vec<f64>)> = seq.iter().map(|&i| &self.boxes[i]).collect();
            let l = self.oracle.tour(key, &bx);
            if l <= self.ell + TOUR_TOL * self.oracle.delta {
                used[j] = true;
                self.dfs(seq, used, l);
                used[j] = false;
            }
            seq.pop();
        }
    }

    fn witness(&self) -> Polyline {
        let d = self.oracle.dim;
        let bx: Vec<&(Vec<f64>, Vec<f64>)> = self.best_seq.iter().map(|&i| &self.boxes[i]).collect();
        let (_, pts) = min_tour(d, self.oracle.delta, &bx);
        let nudge = 1e-9 * self.oracle.delta;
        let mut verts = vec![vec![0.0; d]];
        for (p, b) in pts.iter().zip(&bx) {
            // pull touch points off the closure boundary into the half-open block
            let q: Vec<f64> = (0..d)
                .map(|c| {
                    let mid = 0.5 * (b.0[c] + b.1[c]);
                    if p[c] < mid {
                        (p[c] + nudge).min(mid)
                    } else {
                        (p[c] - nudge).max(mid)
                    }
                })
                .collect();
            verts.push(q);
        }
        Polyline::new(d, &verts).expect("finite vertices")
    }
}

fn point_box_dist(p: &[f64], b: &(Vec<f64>, Vec<f64>)) -> f64 {
    p.iter()
        .enumerate()
        .map(|(c, &v)| {
            let g = (b.0[c] - v).max(v - b.1[c]).max(0.0);
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

fn box_box_dist(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> f64 {
    (0..a.0.len())
        .map(|c| {
            let g = (b.0[c] - a.1[c]).max(a.0[c] - b.1[c]).max(0.0);
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Shortest tour from the origin touching the closed boxes in order. Returns the length and
/// the touch points.
pub fn min_tour(d: usize, delta: f64, boxes: &[&(Vec<f64>, Vec<f64>)]) -> (f64, Vec<Vec<f64>>) {
    let m = boxes.len();
    if m == 0 {
        return (0.0, vec![]);
    }
    let clamp = |v: f64, b: &(Vec<f64>, Vec<f64>), c: usize| v.clamp(b.0[c], b.1[c]);
    // greedy start: successive projections
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut prev = vec![0.0; d];
    for b in boxes {
        let p: Vec<f64> = (0..d).map(|c| clamp(prev[c], b, c)).collect();
        prev = p.clone();
        pts.push(p);
    }
    let origin = vec![0.0; d];
    let mut mu = delta;
    while mu >= 1e-10 * delta {
        let mu2 = mu * mu;
        for _sweep in 0..400 {
            let mut change = 0.0f64;
            for i in 0..m {
                let a_pt = if i == 0 { origin.clone() } else { pts[i - 1].clone() };
                let b_pt = pts.get(i + 1).cloned();
                for c in 0..d {
                    let other = |q: &[f64]| -> f64 {
                        (0..d).filter(|&k| k != c).map(|k| (pts[i][k] - q[k]).powi(2)).sum::<f64>() + mu2
                    };
                    let a = a_pt[c];
                    let new = match &b_pt {
                        None => clamp(a, boxes[i], c),
                        Some(bp) => {
                            let (sa, sb) = (other(&a_pt).sqrt(), other(bp).sqrt());
                            clamp((a * sb + bp[c] * sa) / (sa + sb), boxes[i], c)
                        }
                    };
                    change = change.max((new - pts[i][c]).abs());
                    pts[i][c] = new;
                }
            }
            if change < 1e-13 * delta {
                break;
            }
        }
        mu *= 0.1;
    }
    let mut len = 0.0;
    let mut prev = origin;
    for p in &pts {
        len += super::traversal::dist(&prev, p);
        prev = p.clone();
    }
    (len, pts)
}

/// One-shot convenience wrapper around [`SupOracle`].
pub fn psi_sup_oracle(ell: f64, sys: &PercSystem) -> Result<OracleResult> {
    SupOracle::new(sys)?.sup(ell, sys)
}

#[cfg(test)]
mod tests {
    use super::super::system::psi;
    use super::*;

    fn box5() -> PercSystem {
        PercSystem::closed(2, 1.0, vec![-2, -2], vec![5, 5]).unwrap()
    }

    #[test]
    fn examples() {
        let mut s = box5();
        assert_eq!(psi_sup_oracle(1.5, &s).unwrap().value, 0);
        s.set_open(&[0, 0], true).unwrap();
        assert_eq!(psi_sup_oracle(0.5, &s).unwrap().value, 1);
        let mut all = box5();
        for idx in all.indices().collect::<Vec<_>>() {
            all.set_open(&idx, true).unwrap();
        }
        // the four blocks around the origin are touched at length 0
        assert_eq!(psi_sup_oracle(0.0, &all).unwrap().value, 4);
        let r = psi_sup_oracle(1.0, &all).unwrap();
        assert!(r.value >= 6, "{r:?}");
        let w = r.witness.unwrap();
        assert_eq!(psi(&w, &all).unwrap(), r.value);
    }

    #[test]
    fn straight_line_tours() {
        let b1 = (vec![2.0, 0.0], vec![3.0, 1.0]);
        let (l, _) = min_tour(2, 1.0, &[&b1]);
        assert!((l - 2.0).abs() < 1e-12);
        // reflection: touch x = −1 then reach (0, 2)'s box corner
        let a = (vec![-2.0, 0.0], vec![-1.0, 1.0]);
        let b = (vec![0.0, 2.0], vec![1.0, 3.0]);
        let (l, _) = min_tour(2, 1.0, &[&a, &b]);
        assert!((l - 2.0 * 2f64.sqrt()).abs() < 1e-7, "{l}");
    }

    #[test]
    fn too_large() {
        let s = PercSystem::closed(2, 1.0, vec![0, 0], vec![40, 40]).unwrap();
        assert!(matches!(psi_sup_oracle(1.0, &s), Err(Error::Resource(_))));
    }
}
