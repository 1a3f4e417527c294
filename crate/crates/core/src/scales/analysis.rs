use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::geometry::{geometry, BlockId, BlockKind, Region};
use super::schedule::ScaleSchedule;
use crate::environment::Environment;
use crate::error::{invalid, Error, Result};
use crate::graphical::{ArrowField, Configuration, SpaceTimeGrid, Trajectory, Window};
use crate::percolation::traversal::{blocks_intersected, Polyline};
use crate::walker::WalkPath;

/// Σ_r^x(ξ_t): particles in `[x, x+ω_r)` at time `t`, by point queries.
pub fn window_sum(env: &dyn Environment, schedule: &ScaleSchedule, x: i64, t: f64, r: u32) -> Result<u64> {
    let w = schedule.level(r)?.omega;
    let mut n = 0u64;
    for y in x..x + w {
        n += env.occupancy(y, t)? as u64;
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Rarefied,
    Turbulent,
    Bad,
    LocallySpoiled,
    Stuck,
    NotStuck,
    Rough,
}

/// Block classification against one environment.
///
/// Occupancy on integer times is materialised once, on first use, over the analysis area
/// given at construction; every region a predicate reads must lie inside it. Verdicts are
/// memoised behind a mutex so one analyzer can serve several threads.
pub struct BlockAnalyzer<'a> {
    env: &'a dyn Environment,
    schedule: &'a ScaleSchedule,
    area: (i64, i64, i64, i64),
    grid: OnceLock<std::result::Result<SpaceTimeGrid, Error>>,
    memo: Mutex<HashMap<(BlockId, Kind), bool>>,
}

impl<'a> BlockAnalyzer<'a> {
    /// Analysis area: sites `x0..x1`, integer times `t0..=t1`.
    pub fn new(env: &'a dyn Environment, schedule: &'a ScaleSchedule, x0: i64, x1: i64, t0: i64, t1: i64) -> Result<Self> {
        let (lo, hi) = env.site_range();
        if x0 >= x1 || t0 > t1 {
            return invalid("empty analysis area");
        }
        if x0 < lo || x1 - 1 > hi {
            return Err(Error::OutOfWindow { site: if x0 < lo { x0 } else { x1 - 1 }, time: t0 as f64, lo, hi });
        }
        if t0 < 0 || t1 as f64 > env.horizon() {
            return Err(Error::OutOfHorizon { time: if t0 < 0 { t0 as f64 } else { t1 as f64 }, horizon: env.horizon() });
        }
        Ok(Self { env, schedule, area: (x0, x1, t0, t1), grid: OnceLock::new(), memo: Mutex::new(HashMap::new()) })
    }

    pub fn schedule(&self) -> &ScaleSchedule {
        self.schedule
    }

    pub fn env(&self) -> &dyn Environment {
        self.env
    }

    pub fn grid(&self) -> Result<&SpaceTimeGrid> {
        let (x0, x1, t0, t1) = self.area;
        self.grid.get_or_init(|| self.env.grid(x0, x1, t0, t1)).as_ref().map_err(Clone::clone)
    }

    fn uncovered(&self, x: i64, t: i64) -> Error {
        let (x0, x1, t0, t1) = self.area;
        if t < t0 || t > t1 {
            Error::OutOfHorizon { time: t as f64, horizon: t1 as f64 }
        } else {
            Error::OutOfWindow { site: x, time: t as f64, lo: x0, hi: x1 - 1 }
        }
    }

    /// Σ_r^x(ξ_t) from the materialised grid.
    pub fn window_sum(&self, x: i64, t: i64, r: u32) -> Result<u64> {
        let w = self.schedule.level(r)?.omega;
        self.grid()?.window_count(x, w, t).map(u64::from).ok_or_else(|| self.uncovered(x, t))
    }

    /// Some integer `(x, t)` with `[x, x+ω_r)×{t}` inside `region` has fewer than `ρ_r ω_r`
    /// particles.
    pub fn is_rarefied(&self, region: &Region, r: u32) -> Result<bool> {
        let lvl = self.schedule.level(r)?;
        let (ta, tb) = region.integer_times();
        if region.x1 - region.x0 < lvl.omega || ta > tb || lvl.dense_min == 0 {
            return Ok(false);
        }
        let g = self.grid()?;
        if !g.covers(region.x0, region.x1, ta, tb) {
            return Err(self.uncovered(region.x0, ta));
        }
        let min = lvl.dense_min as u32;
        for t in ta..=tb {
            for x in region.x0..=region.x1 - lvl.omega {
                if g.window_count(x, lvl.omega, t).expect("covered") < min {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Some integer point of the region changes occupancy within `(t, t + ε_r)`.
    pub fn is_turbulent(&self, region: &Region, r: u32) -> Result<bool> {
        let eps = self.schedule.level(r)?.epsilon;
        let (ta, tb) = region.integer_times();
        for t in ta..=tb {
            for x in region.x0..region.x1 {
                if self.env.flips_within(x, t as f64, eps)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Every integer point of the block has both adjacent clocks silent for ε_r.
    pub fn is_stuck(&self, id: BlockId) -> Result<bool> {
        self.memoised(id, Kind::Stuck, || {
            let eps = self.schedule.level(id.r)?.epsilon;
            let reg = geometry(id, BlockKind::Block, self.schedule)?;
            let (ta, tb) = reg.integer_times();
            for t in ta..=tb {
                for x in reg.x0..reg.x1 {
                    if !self.env.clocks_silent(x, t as f64, eps)? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        })
    }

    /// The block's superblock is r-rarefied.
    pub fn is_bad(&self, id: BlockId) -> Result<bool> {
        self.memoised(id, Kind::Bad, || self.is_rarefied(&geometry(id, BlockKind::Superblock, self.schedule)?, id.r))
    }

    /// Rarefied or turbulent, evaluated on the block itself.
    pub fn is_rough(&self, id: BlockId) -> Result<bool> {
        self.memoised(id, Kind::Rough, || {
            let reg = geometry(id, BlockKind::Block, self.schedule)?;
            Ok(self.is_rarefied(&reg, id.r)? || self.is_turbulent(&reg, id.r)?)
        })
    }

    /// Base dense at level `R = id.r` and some ω_{R−1}-window inside the neighbourhood
    /// 𝓑_R has Σ̂ below ρ_{R−1} ω_{R−1}.
    pub fn is_locally_spoiled(&self, id: BlockId) -> Result<bool> {
        self.memoised(id, Kind::LocallySpoiled, || {
            if id.r == 0 {
                return invalid("locally spoiled is defined for blocks at scale >= 1");
            }
            let base = geometry(id, BlockKind::Base, self.schedule)?;
            if self.is_rarefied(&base, id.r)? {
                return Ok(false);
            }
            let r = id.r - 1;
            let lvl = self.schedule.level(r)?;
            if lvl.dense_min == 0 {
                return Ok(false);
            }
            let nb = geometry(id, BlockKind::Neighborhood, self.schedule)?;
            let mut spoiled = false;
            HatSigma::sweep(self.env, self.schedule, id, |_, row, x_lo| {
                if spoiled {
                    return;
                }
                let prefix: Vec<u32> = std::iter::once(0)
                    .chain(row.iter().scan(0u32, |a, &v| {
                        *a += v as u32;
                        Some(*a)
                    }))
                    .collect();
                for x in nb.x0..=nb.x1 - lvl.omega {
                    let i = (x - x_lo) as usize;
                    if ((prefix[i + lvl.omega as usize] - prefix[i]) as u64) < lvl.dense_min {
                        spoiled = true;
                        return;
                    }
                }
            })?;
            Ok(spoiled)
        })
    }

    pub fn eval(&self, id: BlockId, kind: Kind) -> Result<bool> {
        match kind {
            Kind::Rarefied => self.is_rarefied(&geometry(id, BlockKind::Block, self.schedule)?, id.r),
            Kind::Turbulent => self.is_turbulent(&geometry(id, BlockKind::Block, self.schedule)?, id.r),
            Kind::Bad => self.is_bad(id),
            Kind::LocallySpoiled => self.is_locally_spoiled(id),
            Kind::Stuck => self.is_stuck(id),
            Kind::NotStuck => Ok(!self.is_stuck(id)?),
            Kind::Rough => self.is_rough(id),
        }
    }

    fn memoised(&self, id: BlockId, kind: Kind, f: impl FnOnce() -> Result<bool>) -> Result<bool> {
        if let Some(&v) = self.memo.lock().expect("memo lock").get(&(id, kind)) {
            return Ok(v);
        }
        let v = f()?;
        self.memo.lock().expect("memo lock").insert((id, kind), v);
        Ok(v)
    }

    pub fn verdict(&self, id: BlockId) -> Result<BlockVerdict> {
        let reg = geometry(id, BlockKind::Block, self.schedule)?;
        let rarefied = self.is_rarefied(&reg, id.r)?;
        let turbulent = self.is_turbulent(&reg, id.r)?;
        let locally_spoiled = if id.r >= 1 { Some(self.is_locally_spoiled(id)?) } else { None };
        Ok(BlockVerdict {
            id,
            rarefied,
            turbulent,
            bad: self.is_bad(id)?,
            locally_spoiled,
            stuck: self.is_stuck(id)?,
            rough: rarefied || turbulent,
        })
    }
}

/// Flags of one block. `locally_spoiled` is only defined at scale ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockVerdict {
    pub id: BlockId,
    pub rarefied: bool,
    pub turbulent: bool,
    pub bad: bool,
    pub locally_spoiled: Option<bool>,
    pub stuck: bool,
    pub rough: bool,
}

/// Σ̂ for a parent block `P = B_R(K, S)`: particles whose backward path stayed inside the
/// interior B̊_R since the base time `S − 2Δ_R`.
pub struct HatSigma;

impl HatSigma {
    /// By definition: trace each particle in `[x, x+ω_{R−1})` at time `t` back to the base.
    pub fn by_tracing(traj: &Trajectory, schedule: &ScaleSchedule, parent: BlockId, x: i64, t: f64) -> Result<u64> {
        if parent.r == 0 {
            return invalid("hat sigma needs a parent at scale >= 1");
        }
        let d = schedule.delta(parent.r)?;
        let w = schedule.level(parent.r - 1)?.omega;
        let base = (parent.s - 2 * d) as f64;
        if t < base {
            return invalid("time precedes the parent's base");
        }
        let (lo, hi) = (parent.k - 5 * d + 1, parent.k + 6 * d - 2);
        let mut n = 0;
        for y in x..x + w {
            if traj.evolve(y, t)? == 1 {
                let ext = traj.field().trace_extent(y, t, base)?;
                if ext.min >= lo && ext.max <= hi {
                    n += 1;
                }
            }
        }
        Ok(n)
    }

    /// Clean-label sweep over the superblock's sites `𝐕 = [K−5Δ, K+6Δ)`; calls `visit(t,
    /// clean_row, first_site)` at every integer time of the neighbourhood.
    ///
    /// Particles in the interior at the base carry a clean label; labels move with the
    /// stirring and are wiped on the two outermost sites, which lie outside the interior.
    /// Only arrows with both ends in 𝐕 matter: anything else touches an outermost site.
    pub fn sweep(
        env: &dyn Environment,
        schedule: &ScaleSchedule,
        parent: BlockId,
        mut visit: impl FnMut(i64, &[u8], i64),
    ) -> Result<()> {
        if parent.r == 0 {
            return invalid("hat sigma needs a parent at scale >= 1");
        }
        let d = schedule.delta(parent.r)?;
        let (v_lo, v_hi) = (parent.k - 5 * d, parent.k + 6 * d - 1);
        let base = parent.s - 2 * d;
        let (t_first, t_last) = (parent.s - d, parent.s + d - 1);
        let mut clean: Vec<u8> = match env.trajectory() {
            Some(tr) => {
                tr.window().check_site(v_lo, base as f64)?;
                tr.window().check_site(v_hi, base as f64)?;
                let c = tr.config_at(base as f64)?;
                (v_lo..=v_hi).map(|x| c.get(x)).collect::<Result<_>>()?
            }
            None => (v_lo..=v_hi).map(|x| env.occupancy(x, base as f64)).collect::<Result<_>>()?,
        };
        if (t_last as f64) > env.horizon() {
            return Err(Error::OutOfHorizon { time: t_last as f64, horizon: env.horizon() });
        }
        let last = clean.len() - 1;
        clean[0] = 0;
        clean[last] = 0;
        let events = match env.trajectory() {
            Some(tr) => tr.field().chronological(v_lo, v_hi, base as f64, t_last as f64),
            None => Vec::new(),
        };
        let mut next = 0;
        for t in t_first..=t_last {
            while next < events.len() && events[next].0 <= t as f64 {
                let i = (events[next].1 - v_lo) as usize;
                clean.swap(i, i + 1);
                clean[0] = 0;
                clean[last] = 0;
                next += 1;
            }
            visit(t, &clean, v_lo);
        }
        Ok(())
    }

    /// Σ̂ at one point via the sweep.
    pub fn by_sweep(env: &dyn Environment, schedule: &ScaleSchedule, parent: BlockId, x: i64, t: i64) -> Result<u64> {
        let w = schedule.level(parent.r.saturating_sub(1))?.omega;
        let mut out = None;
        Self::sweep(env, schedule, parent, |s, row, lo| {
            if s == t {
                let i = (x - lo) as usize;
                out = row.get(i..i + w as usize).map(|c| c.iter().map(|&v| v as u64).sum());
            }
        })?;
        out.ok_or_else(|| Error::InvalidArgument(format!("({x}, {t}) not in the parent's neighbourhood")))
    }
}

/// The data a parent's locally-spoiled verdict depends on: ξ at its base time and the arrows
/// inside its superblock, as a closed trajectory on 𝐕 with time shifted so the base is 0.
/// Returns the trajectory and the parent's id in the shifted frame.
pub fn restrict_to_superblock(traj: &Trajectory, schedule: &ScaleSchedule, parent: BlockId) -> Result<(Trajectory, BlockId)> {
    let d = schedule.delta(parent.r)?;
    let (v_lo, v_hi) = (parent.k - 5 * d, parent.k + 6 * d - 1);
    let base = (parent.s - 2 * d) as f64;
    let end = (parent.s + d) as f64;
    let w = Window::closed(v_lo, v_hi, end - base)?;
    let events: Vec<(i64, f64)> = traj
        .field()
        .chronological(v_lo, v_hi, base, end.min(traj.window().t_max))
        .into_iter()
        .map(|(t, e)| (e, t - base))
        .collect();
    let field = ArrowField::from_events(&w, &events)?;
    let c = traj.config_at(base)?;
    let occ = (v_lo..=v_hi).map(|x| c.get(x)).collect::<Result<Vec<_>>>()?;
    let tr = Trajectory::new(field, Configuration::from_sites(v_lo, occ)?)?;
    Ok((tr, BlockId { r: parent.r, k: parent.k, s: 2 * d }))
}

/// Named block predicate, looked up at runtime.
pub trait BlockPredicate: Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> Kind;
    fn eval(&self, a: &BlockAnalyzer<'_>, id: BlockId) -> Result<bool> {
        a.eval(id, self.kind())
    }
}

macro_rules! predicate {
    ($ty:ident, $name:literal, $kind:expr) => {
        struct $ty;
        impl BlockPredicate for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn kind(&self) -> Kind {
                $kind
            }
        }
    };
}

predicate!(RarefiedP, "rarefied", Kind::Rarefied);
predicate!(TurbulentP, "turbulent", Kind::Turbulent);
predicate!(BadP, "bad", Kind::Bad);
predicate!(SpoiledP, "locally_spoiled", Kind::LocallySpoiled);
predicate!(StuckP, "stuck", Kind::Stuck);
predicate!(NotStuckP, "not_stuck", Kind::NotStuck);
predicate!(RoughP, "rough", Kind::Rough);

static PREDICATES: [&dyn BlockPredicate; 7] =
    [&RarefiedP, &TurbulentP, &BadP, &SpoiledP, &StuckP, &NotStuckP, &RoughP];

pub fn predicates() -> &'static [&'static dyn BlockPredicate] {
    &PREDICATES
}

pub fn predicate(name: &str) -> Result<&'static dyn BlockPredicate> {
    PREDICATES.iter().copied().find(|p| p.name() == name).ok_or_else(|| {
        let names: Vec<_> = PREDICATES.iter().map(|p| p.name()).collect();
        Error::InvalidArgument(format!("unknown block predicate '{name}' (known: {})", names.join(", ")))
    })
}

/// r-blocks met by a space-time polyline `(x, t)`.
pub fn blocks_on_path(path: &Polyline, schedule: &ScaleSchedule, r: u32) -> Result<Vec<BlockId>> {
    if path.dim() != 2 {
        return invalid("space-time paths are planar");
    }
    let d = schedule.delta(r)?;
    Ok(blocks_intersected(path, d as f64)?.into_iter().map(|i| BlockId { r, k: i[0] * d, s: i[1] * d }).collect())
}

/// Number of distinct r-blocks met by `path` for which `kind` holds.
pub fn path_counts(a: &BlockAnalyzer<'_>, path: &Polyline, r: u32, kind: Kind) -> Result<usize> {
    let mut n = 0;
    for id in blocks_on_path(path, a.schedule(), r)? {
        if a.eval(id, kind)? {
            n += 1;
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathCheck {
    pub phi_r: usize,
    pub phi_next: usize,
    pub psi_next: usize,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecursionReport {
    pub r: u32,
    pub blocks_checked: usize,
    pub bad_blocks: usize,
    pub counterexamples: Vec<BlockId>,
    pub paths: Vec<PathCheck>,
}

impl RecursionReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.paths.iter().all(|p| p.ok)
    }
}

/// Every bad r-block in `blocks` must have a bad or locally spoiled parent; along each
/// path, `Φ_r ≤ N₀^{2E}(Φ_{r+1} + Ψ_{r+1})` with Φ counting bad and Ψ locally spoiled blocks.
pub fn recursion_check(a: &BlockAnalyzer<'_>, r: u32, blocks: &[BlockId], paths: &[Polyline]) -> Result<RecursionReport> {
    let mut rep = RecursionReport { r, blocks_checked: 0, bad_blocks: 0, counterexamples: vec![], paths: vec![] };
    for &id in blocks {
        if id.r != r {
            return invalid("block at the wrong scale");
        }
        rep.blocks_checked += 1;
        if a.is_bad(id)? {
            rep.bad_blocks += 1;
            let p = id.parent(a.schedule())?;
            if !(a.is_bad(p)? || a.is_locally_spoiled(p)?) {
                rep.counterexamples.push(id);
            }
        }
    }
    let factor = a.schedule().children_per_block() as usize;
    for w in paths {
        let phi_r = path_counts(a, w, r, Kind::Bad)?;
        let phi_next = path_counts(a, w, r + 1, Kind::Bad)?;
        let psi_next = path_counts(a, w, r + 1, Kind::LocallySpoiled)?;
        rep.paths.push(PathCheck { phi_r, phi_next, psi_next, ok: phi_r <= factor * (phi_next + psi_next) });
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaReport {
    pub theta: u64,
    /// Integer times inspected, `0..=⌊t⌋`.
    pub times: u64,
    pub phi_rarefied: usize,
    pub phi_turbulent: usize,
    pub bound: u64,
    pub ok: bool,
    /// `rough[s]` for each inspected integer time.
    pub rough: Vec<bool>,
}

/// Θ*_t: integer times `s ≤ t` at which the r*-block containing `(W_s, s)` is rough, with the
/// bound `Δ_{r*}(Φ^r + Φ^t)` counted over the distinct blocks visited.
pub fn theta_star(a: &BlockAnalyzer<'_>, walk: &WalkPath, r_star: u32, t: f64) -> Result<ThetaReport> {
    let d = a.schedule().delta(r_star)?;
    let mut rough = Vec::new();
    let mut visited = BTreeSet::new();
    for s in 0..=(t.floor() as i64) {
        let id = BlockId::containing(r_star, walk.position(s as f64), s as f64, a.schedule())?;
        visited.insert(id);
        rough.push(a.is_rough(id)?);
    }
    let (mut pr, mut pt) = (0, 0);
    for &id in &visited {
        let reg = geometry(id, BlockKind::Block, a.schedule())?;
        pr += usize::from(a.is_rarefied(&reg, r_star)?);
        pt += usize::from(a.is_turbulent(&reg, r_star)?);
    }
    let theta = rough.iter().filter(|&&v| v).count() as u64;
    let bound = d as u64 * (pr + pt) as u64;
    Ok(ThetaReport { theta, times: rough.len() as u64, phi_rarefied: pr, phi_turbulent: pt, bound, ok: theta <= bound, rough })
}

/// All r-blocks with corners in `[k0, k1) × [s0, s1)`.
pub fn blocks_in(schedule: &ScaleSchedule, r: u32, k0: i64, k1: i64, s0: i64, s1: i64) -> Result<Vec<BlockId>> {
    let d = schedule.delta(r)?;
    let first = |v: i64| v.div_euclid(d) * d + if v.rem_euclid(d) == 0 { 0 } else { d };
    let mut out = Vec::new();
    let mut s = first(s0);
    while s < s1 {
        let mut k = first(k0);
        while k < k1 {
            out.push(BlockId { r, k, s });
            k += d;
        }
        s += d;
    }
    Ok(out)
}

pub fn verdicts_csv(rows: &[BlockVerdict]) -> String {
    let mut s = String::from("r,k,s,rarefied,turbulent,bad,locally_spoiled,stuck\n");
    for v in rows {
        let ls = v.locally_spoiled.map(|b| u8::from(b).to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            v.id.r,
            v.id.k,
            v.id.s,
            u8::from(v.rarefied),
            u8::from(v.turbulent),
            u8::from(v.bad),
            ls,
            u8::from(v.stuck)
        );
    }
    s
}

/// Heatmap: one cell per block, colour by the most severe flag (bad, locally spoiled, rough,
/// not stuck, clean).
pub fn verdicts_svg(rows: &[BlockVerdict], schedule: &ScaleSchedule) -> Result<String> {
    if rows.is_empty() {
        return invalid("no verdicts to draw");
    }
    let d = schedule.delta(rows[0].id.r)?;
    let kmin = rows.iter().map(|v| v.id.k).min().unwrap();
    let kmax = rows.iter().map(|v| v.id.k).max().unwrap();
    let smin = rows.iter().map(|v| v.id.s).min().unwrap();
    let smax = rows.iter().map(|v| v.id.s).max().unwrap();
    let (nx, ny) = ((kmax - kmin) / d + 1, (smax - smin) / d + 1);
    let cell = 16;
    let (w, h) = (nx * cell + 120, ny * cell + 20);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}">"#);
    for v in rows {
        let colour = if v.bad {
            "#b2182b"
        } else if v.locally_spoiled == Some(true) {
            "#ef8a62"
        } else if v.rough {
            "#fddbc7"
        } else if !v.stuck {
            "#d1e5f0"
        } else {
            "#f7f7f7"
        };
        let x = (v.id.k - kmin) / d * cell + 10;
        // time runs upwards
        let y = (smax - v.id.s) / d * cell + 10;
        let _ = writeln!(s, r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{colour}" stroke="#999" stroke-width="0.5"/>"##);
    }
    let lx = nx * cell + 20;
    for (i, (c, label)) in
        [("#b2182b", "bad"), ("#ef8a62", "spoiled"), ("#fddbc7", "rough"), ("#d1e5f0", "not stuck"), ("#f7f7f7", "clean")]
            .iter()
            .enumerate()
    {
        let y = 10 + i as i64 * 18;
        let _ = writeln!(s, r##"<rect x="{lx}" y="{y}" width="12" height="12" fill="{c}" stroke="#999"/>"##);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif">{label}</text>"#, lx + 16, y + 10);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::super::make_schedule;
    use super::*;
    use crate::environment::ConstantEnvironment;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn desk() -> ScaleSchedule {
        make_schedule(2, 3, 0.9996, 3).unwrap()
    }

    fn closed_traj(lo: i64, hi: i64, t: f64, rho: f64, seed: u64) -> Trajectory {
        let w = Window::closed(lo, hi, t).unwrap();
        Trajectory::new(ArrowField::sample(&w, seed).unwrap(), Configuration::sample(rho, &w, seed + 1).unwrap()).unwrap()
    }

    #[test]
    fn constant_environments() {
        let s = desk();
        let ones = ConstantEnvironment::new(1, -100, 100, 60.0).unwrap();
        let zeros = ConstantEnvironment::new(0, -100, 100, 60.0).unwrap();
        let a1 = BlockAnalyzer::new(&ones, &s, -100, 100, 0, 60).unwrap();
        let a0 = BlockAnalyzer::new(&zeros, &s, -100, 100, 0, 60).unwrap();
        let id = BlockId::new(1, 0, 16, &s).unwrap();
        assert_eq!(a1.window_sum(3, 5, 1).unwrap(), 2);
        assert_eq!(window_sum(&zeros, &s, 3, 5.0, 2).unwrap(), 0);
        assert!(!a1.is_bad(id).unwrap() && a0.is_bad(id).unwrap());
        assert!(!a1.is_rarefied(&Region::rect(-50, 50, 0, 40), 1).unwrap());
        assert!(a0.is_rarefied(&Region::rect(0, 2, 3, 4), 1).unwrap());
        assert!(!a0.is_rarefied(&Region::rect(0, 1, 3, 40), 1).unwrap());
        assert!(a1.is_stuck(id).unwrap() && !a1.is_turbulent(&Region::rect(0, 8, 16, 24), 1).unwrap());
        assert!(!a1.is_locally_spoiled(BlockId::new(1, 0, 16, &s).unwrap()).unwrap());
        // rarefied base: never locally spoiled
        assert!(!a0.is_locally_spoiled(BlockId::new(1, 0, 16, &s).unwrap()).unwrap());
        assert!(predicate("nope").is_err());
        assert!(predicate("bad").unwrap().eval(&a0, id).unwrap());
        assert!(matches!(a1.is_bad(BlockId::new(1, 96, 16, &s).unwrap()), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn turbulence_and_stuck_examples() {
        let s = desk();
        let eps = s.level(1).unwrap().epsilon;
        let w = Window::closed(-20, 20, 30.0).unwrap();
        let mut occ = vec![0u8; 41];
        occ[20] = 1; // site 0
        occ[25] = 1;
        occ[26] = 1; // sites 5, 6
        let f = ArrowField::from_events(&w, &[(0, 17.0 + eps / 2.0), (5, 17.0 + eps / 3.0)]).unwrap();
        let tr = Trajectory::new(f, Configuration::from_sites(-20, occ).unwrap()).unwrap();
        let a = BlockAnalyzer::new(&tr, &s, -20, 21, 0, 29).unwrap();
        assert!(a.is_turbulent(&Region::slice(0, 1, 17), 1).unwrap());
        // exchange of two particles: no flip at 5 or 6
        assert!(!a.is_turbulent(&Region::slice(5, 7, 17), 1).unwrap());
        assert!(!a.is_stuck(BlockId::new(1, 0, 16, &s).unwrap()).unwrap());
        assert!(a.is_stuck(BlockId::new(1, -16, 16, &s).unwrap()).unwrap());
        let empty = Trajectory::new(ArrowField::empty(&w), Configuration::all_ones(&w)).unwrap();
        let e = BlockAnalyzer::new(&empty, &s, -20, 21, 0, 29).unwrap();
        assert!(e.is_stuck(BlockId::new(1, 0, 16, &s).unwrap()).unwrap());
    }

    #[test]
    fn hat_sigma_routes_agree() {
        let s = desk();
        let parent = BlockId::new(2, 0, 128, &s).unwrap();
        let tr = closed_traj(-320, 383, 192.0, 0.5, 5);
        let mut rng = stream_rng(11, 0);
        for _ in 0..300 {
            let x = rng.random_range(-64..190);
            let t = rng.random_range(64..192);
            let a = HatSigma::by_tracing(&tr, &s, parent, x, t as f64).unwrap();
            let b = HatSigma::by_sweep(&tr, &s, parent, x, t).unwrap();
            let full = window_sum(&tr, &s, x, t as f64, 1).unwrap();
            assert_eq!(a, b, "({x},{t})");
            assert!(a <= full);
        }
    }

    #[test]
    fn hat_sigma_without_arrows_is_sigma() {
        let s = desk();
        let w = Window::closed(-320, 383, 192.0).unwrap();
        let c = Configuration::sample(0.5, &w, 3).unwrap();
        let tr = Trajectory::new(ArrowField::empty(&w), c).unwrap();
        let parent = BlockId::new(2, 0, 128, &s).unwrap();
        for x in [-64, 0, 100, 190] {
            assert_eq!(HatSigma::by_sweep(&tr, &s, parent, x, 100).unwrap(), window_sum(&tr, &s, x, 100.0, 1).unwrap());
        }
    }

    #[test]
    fn entering_particle_not_counted() {
        let s = desk();
        let parent = BlockId::new(2, 0, 128, &s).unwrap();
        // a particle at the outermost site of V enters the interior after the base time
        let w = Window::closed(-330, 390, 192.0).unwrap();
        let mut occ = vec![0u8; 721];
        occ[10] = 1; // site -320
        let f = ArrowField::from_events(&w, &[(-320, 1.0), (-319, 2.0)]).unwrap();
        let tr = Trajectory::new(f, Configuration::from_sites(-330, occ).unwrap()).unwrap();
        assert_eq!(window_sum(&tr, &s, -318, 64.0, 1).unwrap(), 1);
        assert_eq!(HatSigma::by_sweep(&tr, &s, parent, -318, 64).unwrap(), 0);
        assert_eq!(HatSigma::by_tracing(&tr, &s, parent, -318, 64.0).unwrap(), 0);
    }

    #[test]
    fn conveyor_sweeps_particles_out() {
        // R = 2 under N0 = 8, E = 1: Delta_2 = 64, omega_1 = 8, V = [-320, 384), base time 0
        let s = make_schedule(8, 1, 0.86, 3).unwrap();
        let parent = BlockId::new(2, 0, 128, &s).unwrap();
        let (lo, hi) = (-320i64, 383i64);
        let w = Window::closed(lo, hi, 192.0).unwrap();
        // each pass fires the edges right to left, shifting V one site to the right and
        // feeding the (wiped) right end into the left end: the dirty front advances by one
        let sweeps = 300;
        let per = (hi - lo) as usize;
        let dt = 60.0 / (sweeps * per + 1) as f64;
        let mut events = Vec::with_capacity(sweeps * per);
        for j in 0..sweeps {
            for (i, e) in (lo..hi).rev().enumerate() {
                events.push((e, dt * (1 + j * per + i) as f64));
            }
        }
        let f = ArrowField::from_events(&w, &events).unwrap();
        let tr = Trajectory::new(f, Configuration::all_ones(&w)).unwrap();
        let a = BlockAnalyzer::new(&tr, &s, lo, hi + 1, 0, 191).unwrap();
        assert!(!a.is_rarefied(&geometry(parent, BlockKind::Base, &s).unwrap(), 2).unwrap());
        assert!(!a.is_bad(parent).unwrap());
        assert_eq!(HatSigma::by_sweep(&tr, &s, parent, -64, 64).unwrap(), 0);
        assert!(a.is_locally_spoiled(parent).unwrap());
        // same field without the conveyor: nothing is spoiled
        let calm = Trajectory::new(ArrowField::empty(&w), Configuration::all_ones(&w)).unwrap();
        let b = BlockAnalyzer::new(&calm, &s, lo, hi + 1, 0, 191).unwrap();
        assert!(!b.is_locally_spoiled(parent).unwrap());
    }

    #[test]
    fn restriction_preserves_spoiled_verdict() {
        let s = make_schedule(8, 1, 0.86, 3).unwrap();
        for seed in 0..6 {
            let tr = closed_traj(-260, 450, 200.0, 0.96, 40 + seed);
            let parent = BlockId::new(2, 64, 128, &s).unwrap();
            let a = BlockAnalyzer::new(&tr, &s, -260, 451, 0, 200).unwrap();
            let (sub, shifted) = restrict_to_superblock(&tr, &s, parent).unwrap();
            let (lo, hi) = (sub.window().lo(), sub.window().hi() + 1);
            let b = BlockAnalyzer::new(&sub, &s, lo, hi, 0, sub.window().t_max as i64).unwrap();
            assert_eq!(a.is_locally_spoiled(parent).unwrap(), b.is_locally_spoiled(shifted).unwrap());
        }
    }

    #[test]
    fn recursion_and_theta_on_zeros() {
        let s = desk();
        let zeros = ConstantEnvironment::new(0, -400, 400, 300.0).unwrap();
        let a = BlockAnalyzer::new(&zeros, &s, -400, 400, 0, 300).unwrap();
        let blocks = blocks_in(&s, 1, -64, 64, 128, 192).unwrap();
        assert_eq!(blocks.len(), 16 * 8);
        let p = Polyline::planar(&[(0.5, 130.0), (40.0, 170.0)]).unwrap();
        let rep = recursion_check(&a, 1, &blocks, std::slice::from_ref(&p)).unwrap();
        assert!(rep.passed() && rep.bad_blocks == blocks.len());
        assert_eq!(path_counts(&a, &p, 1, Kind::Bad).unwrap(), blocks_on_path(&p, &s, 1).unwrap().len());
        let vertical = Polyline::planar(&[(0.0, 128.0), (0.0, 148.0)]).unwrap();
        assert_eq!(blocks_on_path(&vertical, &s, 1).unwrap().len(), 3);
        assert!(verdicts_svg(&[a.verdict(blocks[0]).unwrap()], &s).unwrap().contains("<svg"));
    }

    #[test]
    fn monotone_under_adding_particles() {
        let s = desk();
        let mut rng = stream_rng(8, 0);
        for seed in 0..20 {
            let w = Window::closed(-60, 60, 30.0).unwrap();
            let f = ArrowField::sample(&w, seed).unwrap();
            let c = Configuration::sample(0.6, &w, seed + 100).unwrap();
            let mut more = c.as_slice().to_vec();
            for v in more.iter_mut() {
                if rng.random::<f64>() < 0.2 {
                    *v = 1;
                }
            }
            let t1 = Trajectory::new(f.clone(), c).unwrap();
            let t2 = Trajectory::new(f, Configuration::from_sites(-60, more).unwrap()).unwrap();
            let a1 = BlockAnalyzer::new(&t1, &s, -60, 61, 0, 30).unwrap();
            let a2 = BlockAnalyzer::new(&t2, &s, -60, 61, 0, 30).unwrap();
            let id = BlockId::new(1, 0, 16, &s).unwrap();
            assert!(a1.is_bad(id).unwrap() >= a2.is_bad(id).unwrap());
            let reg = Region::rect(-30, 30, 5, 25);
            assert!(a1.is_rarefied(&reg, 1).unwrap() >= a2.is_rarefied(&reg, 1).unwrap());
        }
    }
}
