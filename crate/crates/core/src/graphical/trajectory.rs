use super::{ArrowField, Configuration, SpaceTimeGrid, Window};
use crate::error::{invalid, Result};

/// An arrow field together with an initial configuration: the process ξ_t on the window.
///
/// Point queries trace the ζ-path back to the latest cached snapshot (time 0 unless
/// snapshots were requested). Grids and full configurations are produced by sweeping the
/// arrows forward in stirring order.
#[derive(Debug, Clone)]
pub struct Trajectory {
    field: ArrowField,
    snapshots: Vec<(f64, Configuration)>,
}

impl Trajectory {
    pub fn new(field: ArrowField, initial: Configuration) -> Result<Self> {
        let w = field.window();
        if initial.lo() != w.lo() || initial.hi() != w.hi() {
            return invalid(format!(
                "configuration covers [{}, {}] but the window simulates [{}, {}]",
                initial.lo(),
                initial.hi(),
                w.lo(),
                w.hi()
            ));
        }
        Ok(Self { field, snapshots: vec![(0.0, initial)] })
    }

    /// Also caches full configurations at the given times (sorted, within the horizon).
    pub fn with_snapshots(field: ArrowField, initial: Configuration, times: &[f64]) -> Result<Self> {
        let mut traj = Self::new(field, initial)?;
        let mut times: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        for &t in &times {
            traj.window().check_time(t)?;
        }
        let mut snaps = Vec::with_capacity(times.len());
        traj.sweep(0, &times, |t, state| snaps.push((t, state.clone())));
        traj.snapshots.extend(snaps);
        Ok(traj)
    }

    pub fn field(&self) -> &ArrowField {
        &self.field
    }

    pub fn window(&self) -> &Window {
        self.field.window()
    }

    pub fn initial(&self) -> &Configuration {
        &self.snapshots[0].1
    }

    pub fn particle_count(&self) -> usize {
        self.initial().particle_count()
    }

    fn check_query(&self, x: i64, t: f64) -> Result<()> {
        let w = self.window();
        if !w.contains_site(x) || !(0.0..=w.t_max).contains(&t) {
            return invalid(format!("query ({x}, {t}) outside [{}, {}] x [0, {}]", w.lo(), w.hi(), w.t_max));
        }
        Ok(())
    }

    fn snapshot_index(&self, t: f64) -> usize {
        self.snapshots.partition_point(|(s, _)| *s <= t) - 1
    }

    /// ξ_t(x) = ξ_s(ζ^t_s(x)) with `s` the latest snapshot not after `t`.
    pub fn evolve(&self, x: i64, t: f64) -> Result<u8> {
        self.check_query(x, t)?;
        let (s, snap) = &self.snapshots[self.snapshot_index(t)];
        let y = self.field.trace(x, t, *s)?;
        snap.get(y)
    }

    /// Value at `x` just before the arrow `(u, edge)` is applied.
    pub fn evolve_before_event(&self, x: i64, u: f64, edge: i64) -> Result<u8> {
        self.check_query(x, u)?;
        let idx = self.snapshots.partition_point(|(s, _)| *s < u).max(1) - 1;
        let (s, snap) = &self.snapshots[idx];
        let y = self.field.trace_before_event(x, u, edge, *s)?;
        snap.get(y)
    }

    /// Full configuration at time `t`.
    pub fn config_at(&self, t: f64) -> Result<Configuration> {
        self.check_query(self.window().lo(), t)?;
        let idx = self.snapshot_index(t);
        let mut out = None;
        self.sweep(idx, &[t], |_, state| out = Some(state.clone()));
        Ok(out.expect("sweep visits every checkpoint"))
    }

    /// Occupancy of sites `x0..x1` at integer times `t0..=t1`.
    pub fn grid(&self, x0: i64, x1: i64, t0: i64, t1: i64) -> Result<SpaceTimeGrid> {
        let w = self.window();
        if x0 >= x1 || t0 > t1 {
            return invalid("empty grid request");
        }
        self.check_query(x0, t0 as f64)?;
        self.check_query(x1 - 1, t1 as f64)?;
        let times: Vec<f64> = (t0..=t1).map(|t| t as f64).collect();
        let (a, b) = ((x0 - w.lo()) as usize, (x1 - w.lo()) as usize);
        let mut rows = Vec::with_capacity(times.len());
        self.sweep(self.snapshot_index(t0 as f64), &times, |_, state| {
            rows.push(state.as_slice()[a..b].to_vec())
        });
        Ok(SpaceTimeGrid::from_rows(x0, x1, t0, rows))
    }

    /// Replays arrows from snapshot `idx`, calling `visit` at each checkpoint (sorted).
    fn sweep(&self, idx: usize, checkpoints: &[f64], mut visit: impl FnMut(f64, &Configuration)) {
        let Some(&last) = checkpoints.last() else { return };
        let (t_start, snap) = &self.snapshots[idx];
        let mut state = snap.clone();
        let lo = state.lo();
        let events = self.field.chronological(lo, state.hi(), *t_start, last);
        let mut next = 0;
        for &c in checkpoints {
            while next < events.len() && events[next].0 <= c {
                let i = (events[next].1 - lo) as usize;
                state.as_mut_slice().swap(i, i + 1);
                next += 1;
            }
            visit(c, &state);
        }
    }
}
