use std::sync::OnceLock;

use rand::Rng;
use rand_distr::Exp1;

use super::Window;
use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;

/// Poisson arrow events on every edge `{x, x+1}` of a window.
///
/// Edge `{x, x+1}` is addressed by its left site `x`. Sampled fields are generated lazily,
/// edge by edge, from a ChaCha8 stream keyed by the absolute left site. Two windows built
/// from the same seed therefore carry identical arrows on the edges they share, and a
/// query that only touches a few edges never pays for the rest of the window.
#[derive(Debug, Clone)]
pub struct ArrowField {
    window: Window,
    seed: Option<u64>,
    edges: Vec<OnceLock<Box<[f64]>>>,
}

/// End point of a traced ζ-path together with the range of sites it visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathExtent {
    pub end: i64,
    pub min: i64,
    pub max: i64,
}

impl ArrowField {
    /// Independent rate-1 Poisson processes on all edges, deterministic in `seed`.
    pub fn sample(window: &Window, seed: u64) -> Result<Self> {
        let window = Window::with_buffer(window.x_min, window.x_max, window.t_max, window.buffer)?;
        let edges = (0..window.n_edges()).map(|_| OnceLock::new()).collect();
        Ok(Self { window, seed: Some(seed), edges })
    }

    /// A field without any arrows.
    pub fn empty(window: &Window) -> Self {
        Self::from_sorted(window, vec![Vec::new(); window.n_edges()])
    }

    /// Handcrafted field from `(edge_left_site, time)` pairs.
    pub fn from_events(window: &Window, events: &[(i64, f64)]) -> Result<Self> {
        let mut per_edge = vec![Vec::new(); window.n_edges()];
        for &(left, t) in events {
            if left < window.lo() || left >= window.hi() {
                return Err(Error::OutOfWindow { site: left, time: t, lo: window.lo(), hi: window.hi() });
            }
            if !(t > 0.0 && t <= window.t_max) {
                return invalid(format!("arrow time {t} outside (0, {}]", window.t_max));
            }
            per_edge[(left - window.lo()) as usize].push(t);
        }
        for times in per_edge.iter_mut() {
            times.sort_by(f64::total_cmp);
            if times.windows(2).any(|w| w[0] == w[1]) {
                return invalid("two arrows on one edge at the same time");
            }
        }
        Ok(Self::from_sorted(window, per_edge))
    }

    fn from_sorted(window: &Window, per_edge: Vec<Vec<f64>>) -> Self {
        let edges = per_edge
            .into_iter()
            .map(|v| {
                let cell = OnceLock::new();
                let _ = cell.set(v.into_boxed_slice());
                cell
            })
            .collect();
        Self { window: *window, seed: None, edges }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Event times on edge `{left, left+1}`; empty outside the window.
    pub fn edge(&self, left: i64) -> &[f64] {
        let lo = self.window.lo();
        if left < lo || left >= self.window.hi() {
            return &[];
        }
        let idx = (left - lo) as usize;
        self.edges[idx].get_or_init(|| match self.seed {
            Some(seed) => generate_edge(seed, left, self.window.t_max),
            None => Box::new([]),
        })
    }

    /// Force generation of every edge.
    pub fn materialize(&self) {
        for left in self.window.lo()..self.window.hi() {
            self.edge(left);
        }
    }

    pub fn total_events(&self) -> usize {
        (self.window.lo()..self.window.hi()).map(|e| self.edge(e).len()).sum()
    }

    /// Does edge `{left, left+1}` ring in the open interval `(a, b)`?
    pub fn rings_in_open(&self, left: i64, a: f64, b: f64) -> bool {
        let ts = self.edge(left);
        let i = ts.partition_point(|&v| v <= a);
        i < ts.len() && ts[i] < b
    }

    /// Events with both endpoints in `[lo, hi]` and times in `(t0, t1]`, sorted by
    /// `(time, edge)` — the order in which the stirring applies them.
    pub fn chronological(&self, lo: i64, hi: i64, t0: f64, t1: f64) -> Vec<(f64, i64)> {
        let lo = lo.max(self.window.lo());
        let hi = hi.min(self.window.hi());
        let mut out = Vec::new();
        for left in lo..hi {
            let ts = self.edge(left);
            let a = ts.partition_point(|&v| v <= t0);
            let b = ts.partition_point(|&v| v <= t1);
            out.extend(ts[a..b].iter().map(|&t| (t, left)));
        }
        out.sort_unstable_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        out
    }

    /// ζ^t_s(x): position at time `s` of the path through `(x, t)`.
    pub fn trace(&self, x: i64, t: f64, s: f64) -> Result<i64> {
        Ok(self.trace_extent(x, t, s)?.end)
    }

    /// Like [`trace`](Self::trace) but also reports the sites visited on the way.
    ///
    /// A path started inside the region of interest that reaches the outermost simulated
    /// site is reported as out-of-window: the buffer was too small to shield it from the
    /// artificial boundary. Buffer-free windows are closed systems by choice and skip this.
    pub fn trace_extent(&self, x: i64, t: f64, s: f64) -> Result<PathExtent> {
        self.window.check_site(x, t)?;
        self.window.check_time(t)?;
        self.window.check_time(s)?;
        let guard = self.window.buffer > 0 && self.window.in_interest(x);
        let ext = if s >= t {
            self.walk_forward(x, (t, i64::MAX), s)
        } else {
            self.walk_backward(x, (t, i64::MAX), s)
        };
        if guard && (ext.min <= self.window.lo() || ext.max >= self.window.hi()) {
            let site = if ext.min <= self.window.lo() { ext.min } else { ext.max };
            return Err(Error::OutOfWindow { site, time: s, lo: self.window.lo(), hi: self.window.hi() });
        }
        Ok(ext)
    }

    /// Backward trace that starts just before the event `(u, edge)` is applied: crosses
    /// exactly the events strictly before `(u, edge)` in stirring order and after `s`.
    pub fn trace_before_event(&self, x: i64, u: f64, edge: i64, s: f64) -> Result<i64> {
        self.window.check_site(x, u)?;
        self.window.check_time(u)?;
        self.window.check_time(s)?;
        Ok(self.walk_backward(x, (u, edge), s).end)
    }

    // Crosses events with key > `key` and time <= s, in increasing (time, edge) order.
    fn walk_forward(&self, mut pos: i64, mut key: (f64, i64), s: f64) -> PathExtent {
        let (mut min, mut max) = (pos, pos);
        loop {
            let mut best: Option<(f64, i64)> = None;
            for e in [pos - 1, pos] {
                let ts = self.edge(e);
                let mut j = ts.partition_point(|&v| v < key.0);
                if j < ts.len() && ts[j] == key.0 && e <= key.1 {
                    j += 1;
                }
                if j < ts.len() && ts[j] <= s {
                    let cand = (ts[j], e);
                    if best.is_none_or(|b| lex_lt(cand, b)) {
                        best = Some(cand);
                    }
                }
            }
            match best {
                None => break,
                Some((u, e)) => {
                    pos = if e == pos { pos + 1 } else { pos - 1 };
                    key = (u, e);
                    min = min.min(pos);
                    max = max.max(pos);
                }
            }
        }
        PathExtent { end: pos, min, max }
    }

    // Crosses events with key < `key` and time > s, in decreasing (time, edge) order.
    fn walk_backward(&self, mut pos: i64, mut key: (f64, i64), s: f64) -> PathExtent {
        let (mut min, mut max) = (pos, pos);
        loop {
            let mut best: Option<(f64, i64)> = None;
            for e in [pos - 1, pos] {
                let ts = self.edge(e);
                let mut j = ts.partition_point(|&v| v <= key.0);
                if j > 0 && ts[j - 1] == key.0 && e >= key.1 {
                    j -= 1;
                }
                if j > 0 && ts[j - 1] > s {
                    let cand = (ts[j - 1], e);
                    if best.is_none_or(|b| lex_lt(b, cand)) {
                        best = Some(cand);
                    }
                }
            }
            match best {
                None => break,
                Some((u, e)) => {
                    pos = if e == pos { pos + 1 } else { pos - 1 };
                    key = (u, e);
                    min = min.min(pos);
                    max = max.max(pos);
                }
            }
        }
        PathExtent { end: pos, min, max }
    }
}

fn lex_lt(a: (f64, i64), b: (f64, i64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn generate_edge(seed: u64, left: i64, t_max: f64) -> Box<[f64]> {
    let mut rng = stream_rng(seed, left as u64);
    let mut out = Vec::new();
    let mut t = 0.0f64;
    loop {
        let gap: f64 = rng.sample(Exp1);
        let next = t + gap;
        if next > t_max {
            break;
        }
        // A zero gap would break strict monotonicity; it has probability zero but the
        // ordering invariant must hold unconditionally.
        if next > t {
            out.push(next);
            t = next;
        }
    }
    out.into_boxed_slice()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed(lo: i64, hi: i64, t: f64) -> Window {
        Window::closed(lo, hi, t).unwrap()
    }

    #[test]
    fn no_arrows_means_vertical_paths() {
        let f = ArrowField::empty(&closed(-5, 5, 3.0));
        for x in -5..=5 {
            assert_eq!(f.trace(x, 0.0, 3.0).unwrap(), x);
            assert_eq!(f.trace(x, 2.5, 0.5).unwrap(), x);
        }
    }

    #[test]
    fn single_arrow_forces_crossing() {
        let f = ArrowField::from_events(&closed(-3, 3, 2.0), &[(0, 1.0)]).unwrap();
        assert_eq!(f.trace(0, 0.0, 1.5).unwrap(), 1);
        assert_eq!(f.trace(1, 0.0, 1.5).unwrap(), 0);
        // right-continuity: at the event time the crossing has happened
        assert_eq!(f.trace(0, 0.0, 1.0).unwrap(), 1);
        assert_eq!(f.trace(0, 0.0, 0.999).unwrap(), 0);
        // backward from the event time undoes it
        assert_eq!(f.trace(1, 1.0, 0.0).unwrap(), 0);
        // an event at the start time is already applied
        assert_eq!(f.trace(1, 1.0, 2.0).unwrap(), 1);
    }

    #[test]
    fn simultaneous_events_lower_edge_first() {
        // Edges {0,1} and {1,2} ring at the same instant. Lower edge first: the path at 0
        // goes to 1 and then to 2 in the same instant; the path at 2 goes to 1 only after
        // the crossing on {0,1} was applied, so it stays at 1.
        let f = ArrowField::from_events(&closed(-2, 4, 2.0), &[(0, 1.0), (1, 1.0)]).unwrap();
        assert_eq!(f.trace(0, 0.0, 2.0).unwrap(), 2);
        assert_eq!(f.trace(2, 0.0, 2.0).unwrap(), 1);
        assert_eq!(f.trace(1, 0.0, 2.0).unwrap(), 0);
        for x in -2..=4 {
            let y = f.trace(x, 0.0, 2.0).unwrap();
            assert_eq!(f.trace(y, 2.0, 0.0).unwrap(), x);
        }
    }

    #[test]
    fn lazy_generation_matches_across_windows() {
        let a = ArrowField::sample(&closed(-50, 50, 7.0), 99).unwrap();
        let b = ArrowField::sample(&closed(-10, 80, 7.0), 99).unwrap();
        for e in -10..50 {
            assert_eq!(a.edge(e), b.edge(e));
        }
        // A shorter horizon sees a prefix of the same events.
        let c = ArrowField::sample(&closed(-10, 80, 3.0), 99).unwrap();
        for e in -10..50 {
            let n = c.edge(e).len();
            assert_eq!(c.edge(e), &a.edge(e)[..n]);
            assert!(a.edge(e)[n..].iter().all(|&t| t > 3.0));
        }
    }

    #[test]
    fn sampled_times_strictly_increasing_and_in_range() {
        let w = closed(0, 200, 4.0);
        let f = ArrowField::sample(&w, 5).unwrap();
        for e in 0..200 {
            let ts = f.edge(e);
            assert!(ts.windows(2).all(|p| p[0] < p[1]));
            assert!(ts.iter().all(|&t| t > 0.0 && t <= 4.0));
        }
        assert!(f.edge(200).is_empty() && f.edge(-1).is_empty());
    }

    #[test]
    fn chronological_is_sorted_and_complete() {
        let w = closed(0, 30, 5.0);
        let f = ArrowField::sample(&w, 11).unwrap();
        let ev = f.chronological(0, 30, 0.0, 5.0);
        assert_eq!(ev.len(), f.total_events());
        assert!(ev.windows(2).all(|p| lex_lt(p[0], p[1])));
        let part = f.chronological(5, 10, 1.0, 2.0);
        assert!(part.iter().all(|&(t, e)| (5..10).contains(&e) && t > 1.0 && t <= 2.0));
    }

    #[test]
    fn out_of_window_detection() {
        let w = Window::with_buffer(0, 4, 50.0, 1).unwrap();
        let f = ArrowField::sample(&w, 3).unwrap();
        assert!(matches!(f.trace(-5, 0.0, 1.0), Err(Error::OutOfWindow { .. })));
        assert!(matches!(f.trace(0, 0.0, 60.0), Err(Error::OutOfHorizon { .. })));
        // With a one-site buffer and horizon 50 some path from the interest region hits it.
        let hit = (0..=4).any(|x| matches!(f.trace(x, 0.0, 50.0), Err(Error::OutOfWindow { .. })));
        assert!(hit);
    }

    #[test]
    fn rejects_bad_events() {
        let w = closed(0, 3, 1.0);
        assert!(ArrowField::from_events(&w, &[(3, 0.5)]).is_err());
        assert!(ArrowField::from_events(&w, &[(0, 1.5)]).is_err());
        assert!(ArrowField::from_events(&w, &[(0, 0.5), (0, 0.5)]).is_err());
    }

    #[test]
    fn rings_in_open_interval() {
        let f = ArrowField::from_events(&closed(0, 3, 2.0), &[(1, 1.0)]).unwrap();
        assert!(f.rings_in_open(1, 0.5, 1.5));
        assert!(!f.rings_in_open(1, 1.0, 1.5));
        assert!(!f.rings_in_open(1, 0.5, 1.0));
        assert!(!f.rings_in_open(0, 0.0, 2.0));
    }
}
