use serde::{Deserialize, Serialize};

use super::ScaleSchedule;
use crate::error::{invalid, Result};

/// B_r(k, s) = [k, k+Δ_r) × [s, s+Δ_r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockId {
    pub r: u32,
    pub k: i64,
    pub s: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Block,
    Superblock,
    Neighborhood,
    Base,
    Interior,
}

/// Time extent of a region: a half-open interval or a single instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeSpan {
    HalfOpen(i64, i64),
    Instant(i64),
}

/// `[x0, x1) × time` with integer corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x0: i64,
    pub x1: i64,
    pub time: TimeSpan,
}

impl Region {
    pub fn rect(x0: i64, x1: i64, t0: i64, t1: i64) -> Self {
        Self { x0, x1, time: TimeSpan::HalfOpen(t0, t1) }
    }

    pub fn slice(x0: i64, x1: i64, t: i64) -> Self {
        Self { x0, x1, time: TimeSpan::Instant(t) }
    }

    /// Inclusive range of integer times in the region (empty when `first > last`).
    pub fn integer_times(&self) -> (i64, i64) {
        match self.time {
            TimeSpan::HalfOpen(a, b) => (a, b - 1),
            TimeSpan::Instant(t) => (t, t),
        }
    }

    pub fn is_empty(&self) -> bool {
        let (a, b) = self.integer_times();
        self.x0 >= self.x1 || a > b
    }

    /// Set inclusion of the underlying subsets of ℤ × ℝ.
    pub fn contains(&self, other: &Region) -> bool {
        let space = other.x0 >= self.x0 && other.x1 <= self.x1;
        let time = match (self.time, other.time) {
            (TimeSpan::HalfOpen(a, b), TimeSpan::HalfOpen(c, d)) => c >= a && d <= b,
            (TimeSpan::HalfOpen(a, b), TimeSpan::Instant(t)) => t >= a && t < b,
            (TimeSpan::Instant(t), TimeSpan::Instant(u)) => t == u,
            (TimeSpan::Instant(_), TimeSpan::HalfOpen(..)) => false,
        };
        space && time
    }

    pub fn contains_point(&self, x: i64, t: f64) -> bool {
        let time = match self.time {
            TimeSpan::HalfOpen(a, b) => t >= a as f64 && t < b as f64,
            TimeSpan::Instant(s) => t == s as f64,
        };
        x >= self.x0 && x < self.x1 && time
    }

    pub fn disjoint(&self, other: &Region) -> bool {
        let (a, b) = self.time_interval();
        let (c, d) = other.time_interval();
        self.x1 <= other.x0 || other.x1 <= self.x0 || b <= c || d <= a
    }

    fn time_interval(&self) -> (f64, f64) {
        match self.time {
            TimeSpan::HalfOpen(a, b) => (a as f64, b as f64),
            TimeSpan::Instant(t) => (t as f64, t as f64 + f64::MIN_POSITIVE),
        }
    }
}

impl BlockId {
    pub fn new(r: u32, k: i64, s: i64, schedule: &ScaleSchedule) -> Result<Self> {
        let d = schedule.delta(r)?;
        if k.rem_euclid(d) != 0 || s.rem_euclid(d) != 0 {
            return invalid(format!("block corner ({k}, {s}) not a multiple of Delta_{r} = {d}"));
        }
        Ok(Self { r, k, s })
    }

    /// The r-block containing the space-time point `(x, t)`.
    pub fn containing(r: u32, x: i64, t: f64, schedule: &ScaleSchedule) -> Result<Self> {
        let d = schedule.delta(r)?;
        let s = (t / d as f64).floor() as i64 * d;
        Ok(Self { r, k: x.div_euclid(d) * d, s })
    }

    pub fn parent(&self, schedule: &ScaleSchedule) -> Result<Self> {
        let d = schedule.delta(self.r + 1)?;
        Ok(Self { r: self.r + 1, k: self.k.div_euclid(d) * d, s: self.s.div_euclid(d) * d })
    }

    pub fn children(&self, schedule: &ScaleSchedule) -> Result<Vec<Self>> {
        if self.r == 0 {
            return invalid("scale-0 blocks have no children");
        }
        let (d, dc) = (schedule.delta(self.r)?, schedule.delta(self.r - 1)?);
        let mut out = Vec::new();
        for s in (self.s..self.s + d).step_by(dc as usize) {
            for k in (self.k..self.k + d).step_by(dc as usize) {
                out.push(Self { r: self.r - 1, k, s });
            }
        }
        Ok(out)
    }

    /// Class in the 33-class residue partition (corner index mod 11 in space, mod 3 in time).
    pub fn residue_class(&self, schedule: &ScaleSchedule) -> Result<u32> {
        let d = schedule.delta(self.r)?;
        let (i, j) = ((self.k / d).rem_euclid(11), (self.s / d).rem_euclid(3));
        Ok((i * 3 + j) as u32)
    }

    /// Class in the two-class (odd/even space index) partition used for stuck blocks.
    pub fn parity_class(&self, schedule: &ScaleSchedule) -> Result<u32> {
        Ok((self.k / schedule.delta(self.r)?).rem_euclid(2) as u32)
    }
}

pub fn geometry(id: BlockId, kind: BlockKind, schedule: &ScaleSchedule) -> Result<Region> {
    let d = schedule.delta(id.r)?;
    let (k, s) = (id.k, id.s);
    Ok(match kind {
        BlockKind::Block => Region::rect(k, k + d, s, s + d),
        BlockKind::Superblock => Region::rect(k - 5 * d, k + 6 * d, s - 2 * d, s + d),
        BlockKind::Neighborhood => Region::rect(k - d, k + 2 * d, s - d, s + d),
        BlockKind::Base => Region::slice(k - 5 * d, k + 6 * d, s - 2 * d),
        BlockKind::Interior => Region::rect(k - 5 * d + 1, k + 6 * d - 1, s - 2 * d, s + d),
    })
}

#[cfg(test)]
mod tests {
    use super::super::make_schedule;
    use super::*;

    fn desk() -> ScaleSchedule {
        make_schedule(2, 3, 0.9996, 3).unwrap()
    }

    #[test]
    fn superblock_example() {
        let s = desk();
        let id = BlockId::new(1, 0, 0, &s).unwrap();
        assert_eq!(geometry(id, BlockKind::Superblock, &s).unwrap(), Region::rect(-40, 48, -16, 8));
        assert_eq!(geometry(id, BlockKind::Base, &s).unwrap(), Region::slice(-40, 48, -16));
        assert!(BlockId::new(1, 4, 0, &s).is_err());
    }

    #[test]
    fn nesting_and_family() {
        let s = desk();
        for (k, t) in [(0, 0), (-8, 16), (64, -24)] {
            let id = BlockId::new(1, k, t, &s).unwrap();
            let g = |kind| geometry(id, kind, &s).unwrap();
            assert!(g(BlockKind::Neighborhood).contains(&g(BlockKind::Block)));
            assert!(g(BlockKind::Superblock).contains(&g(BlockKind::Neighborhood)));
            assert!(g(BlockKind::Superblock).contains(&g(BlockKind::Base)));
            assert!(g(BlockKind::Superblock).contains(&g(BlockKind::Interior)));
            let p = id.parent(&s).unwrap();
            assert!(p.children(&s).unwrap().contains(&id));
            assert_eq!(p.children(&s).unwrap().len(), 64);
            // child superblock sits inside the parent's neighbourhood
            let pn = geometry(p, BlockKind::Neighborhood, &s).unwrap();
            for c in p.children(&s).unwrap() {
                assert!(pn.contains(&geometry(c, BlockKind::Superblock, &s).unwrap()));
            }
        }
        assert_eq!(BlockId::containing(1, -1, 7.9, &s).unwrap(), BlockId { r: 1, k: -8, s: 0 });
    }

    #[test]
    fn partitions() {
        let s = desk();
        let mut classes = std::collections::BTreeSet::new();
        let mut by_class: std::collections::BTreeMap<u32, Vec<BlockId>> = Default::default();
        for i in -15..15 {
            for j in -6..6 {
                let id = BlockId::new(1, 8 * i, 8 * j, &s).unwrap();
                let c = id.residue_class(&s).unwrap();
                classes.insert(c);
                by_class.entry(c).or_default().push(id);
            }
        }
        assert_eq!(classes.len(), 33);
        for ids in by_class.values() {
            for (a, x) in ids.iter().enumerate() {
                for y in &ids[a + 1..] {
                    let gx = geometry(*x, BlockKind::Superblock, &s).unwrap();
                    let gy = geometry(*y, BlockKind::Superblock, &s).unwrap();
                    assert!(gx.disjoint(&gy));
                }
            }
        }
        let parities: std::collections::BTreeSet<_> =
            (-4..4).map(|i| BlockId::new(1, 8 * i, 0, &s).unwrap().parity_class(&s).unwrap()).collect();
        assert_eq!(parities.len(), 2);
    }
}
