//! Simulated system of independent walkers, ξ°_t(x) = Σ_z η̄(z) 1{S^z_t = x}.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::kernel::JUMP_RATE;
use crate::error::{invalid, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkerPath {
    pub start: i64,
    /// (time, new position) after every jump that actually moved the walker.
    pub jumps: Vec<(f64, i64)>,
}

impl WalkerPath {
    pub fn position(&self, t: f64) -> i64 {
        let i = self.jumps.partition_point(|j| j.0 <= t);
        if i == 0 {
            self.start
        } else {
            self.jumps[i - 1].1
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsrwSystem {
    pub window: Option<(i64, i64)>,
    pub horizon: f64,
    pub walkers: Vec<WalkerPath>,
}

impl IsrwSystem {
    pub fn positions(&self, t: f64) -> Vec<i64> {
        self.walkers.iter().map(|w| w.position(t)).collect()
    }

    /// ξ°_t(x); may exceed 1.
    pub fn occupation(&self, x: i64, t: f64) -> usize {
        self.walkers.iter().filter(|w| w.position(t) == x).count()
    }

    /// Σ_{y∈[x,x+w)} ξ°_t(y).
    pub fn window_count(&self, x: i64, w: i64, t: f64) -> usize {
        self.walkers.iter().filter(|p| (x..x + w).contains(&p.position(t))).count()
    }

    pub fn total(&self, t: f64) -> usize {
        match self.window {
            Some((lo, hi)) => self.window_count(lo, hi - lo + 1, t),
            None => self.walkers.len(),
        }
    }
}

/// One walker per entry of `walkers`; walker i uses stream i of `seed`. On a closed window,
/// jumps that would leave it are suppressed.
pub fn simulate_isrw(walkers: &[i64], window: Option<(i64, i64)>, horizon: f64, seed: u64) -> Result<IsrwSystem> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return invalid(format!("horizon must be finite and >= 0, got {horizon}"));
    }
    if let Some((lo, hi)) = window {
        if lo > hi {
            return invalid(format!("empty window [{lo}, {hi}]"));
        }
        if let Some(&z) = walkers.iter().find(|&&z| z < lo || z > hi) {
            return invalid(format!("walker start {z} outside [{lo}, {hi}]"));
        }
    }
    let paths = walkers
        .iter()
        .enumerate()
        .map(|(i, &start)| {
            let mut rng = stream_rng(seed, i as u64);
            let mut t = 0.0;
            let mut pos = start;
            let mut jumps = Vec::new();
            loop {
                let e: f64 = rng.sample(Exp1);
                t += e / JUMP_RATE;
                if t > horizon {
                    break;
                }
                let to = if rng.random::<bool>() { pos + 1 } else { pos - 1 };
                let inside = window.is_none_or(|(lo, hi)| (lo..=hi).contains(&to));
                if inside {
                    pos = to;
                    jumps.push((t, pos));
                }
            }
            WalkerPath { start, jumps }
        })
        .collect();
    Ok(IsrwSystem { window, horizon, walkers: paths })
}

#[cfg(test)]
mod tests {
    use super::super::exact::exp_moment_isrw_exact;
    use super::super::kernel::{SrwKernel, DEFAULT_TOL};
    use super::*;

    #[test]
    fn empty_and_conserved() {
        let s = simulate_isrw(&[], None, 10.0, 1).unwrap();
        assert_eq!(s.total(5.0), 0);
        let c = simulate_isrw(&[0, 0, 3, 5], Some((0, 5)), 50.0, 2).unwrap();
        for t in [0.0, 1.0, 17.3, 50.0] {
            assert_eq!(c.total(t), 4);
        }
        assert_eq!(c.occupation(0, 0.0), 2);
        let again = simulate_isrw(&[0, 0, 3, 5], Some((0, 5)), 50.0, 2).unwrap();
        assert_eq!(c.positions(33.0), again.positions(33.0));
    }

    #[test]
    fn single_walker_marginal() {
        let t = 2.0;
        let k = SrwKernel::infinite(t, DEFAULT_TOL).unwrap();
        let n = 20_000;
        let mut hits = [0usize; 5];
        for seed in 0..n {
            let s = simulate_isrw(&[0], None, t, seed as u64).unwrap();
            let p = s.positions(t)[0];
            if (-2..=2).contains(&p) {
                hits[(p + 2) as usize] += 1;
            }
        }
        for (i, &h) in hits.iter().enumerate() {
            let p = k.displacement(i as i64 - 2);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((h as f64 / n as f64 - p).abs() < 4.0 * se, "{i}");
        }
    }

    #[test]
    fn product_formula_matches_monte_carlo() {
        let (t, lambda) = (1.5, 0.8);
        let walkers = [-2, 0, 0, 1, 4];
        let k = SrwKernel::infinite(t, DEFAULT_TOL).unwrap();
        let exact = exp_moment_isrw_exact(&walkers, -1, 3, &k, lambda);
        let n = 20_000;
        let vals: Vec<f64> = (0..n)
            .map(|seed| {
                let s = simulate_isrw(&walkers, None, t, 1000 + seed).unwrap();
                (lambda * s.window_count(-1, 3, t) as f64).exp()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((mean - exact).abs() < 4.0 * (var / n as f64).sqrt(), "{mean} vs {exact}");
    }
}
