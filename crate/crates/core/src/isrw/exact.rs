//! Exact exponential moments: independent walkers by the product formula, exclusion on a
//! tiny closed window by evolving the full distribution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{poisson_weights, SrwKernel, DEFAULT_TOL};
use crate::error::{invalid, Error, Result};
use crate::graphical::Configuration;

pub const MAX_EXACT_SITES: usize = 10;

/// E[exp(λ Σ_{y∈[x,x+w)} ξ°_t(y))] for walkers started at `walkers` (one per entry):
/// Π_z {1 + (e^λ − 1) P(S^z_t ∈ I)}.
pub fn exp_moment_isrw_exact(walkers: &[i64], x: i64, w: i64, kernel: &SrwKernel, lambda: f64) -> f64 {
    let a = lambda.exp_m1();
    walkers.iter().map(|&z| 1.0 + a * kernel.prob_in(z, x, x + w)).product()
}

/// E[Σ_{y∈I} ξ°_t(y)] = Σ_z P(S^z_t ∈ I).
pub fn mean_count_isrw(walkers: &[i64], x: i64, w: i64, kernel: &SrwKernel) -> f64 {
    walkers.iter().map(|&z| kernel.prob_in(z, x, x + w)).sum()
}

/// exp{(e^λ − 1) E[Σ]} — the factor-wise 1 + a ≤ e^a bound on the product formula.
pub fn exp_moment_isrw_bound(walkers: &[i64], x: i64, w: i64, kernel: &SrwKernel, lambda: f64) -> f64 {
    (lambda.exp_m1() * mean_count_isrw(walkers, x, w, kernel)).exp()
}

/// Distribution of the exclusion process at time `t` on the closed window carrying `eta`,
/// indexed by occupation bitmask (bit i = site `eta.lo() + i`). Returns the distribution
/// and a bound on the total-variation truncation error.
pub fn ssep_distribution(eta: &Configuration, t: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = eta.len();
    if n > MAX_EXACT_SITES {
        return Err(Error::Resource(format!(
            "exact exclusion needs 2^{n} states; the limit is {MAX_EXACT_SITES} sites"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return invalid(format!("time must be finite and >= 0, got {t}"));
    }
    let start: usize = eta.as_slice().iter().enumerate().map(|(i, &v)| (v as usize) << i).sum();
    let mut dist = vec![0.0; 1 << n];
    dist[start] = 1.0;
    let edges = n.saturating_sub(1);
    if edges == 0 || t == 0.0 {
        return Ok((dist, 0.0));
    }
    // each edge rings at rate 1: uniformize at rate `edges`, one uniformly chosen swap per step
    let (w, tail) = poisson_weights(edges as f64 * t, tol)?;
    let mut out = vec![0.0; 1 << n];
    let mut next = vec![0.0; 1 << n];
    for (step, &wk) in w.iter().enumerate() {
        for (o, d) in out.iter_mut().zip(&dist) {
            *o += wk * d;
        }
        if step + 1 == w.len() {
            break;
        }
        next.fill(0.0);
        let share = 1.0 / edges as f64;
        for (s, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for e in 0..edges {
                let (a, b) = ((s >> e) & 1, (s >> (e + 1)) & 1);
                let to = if a != b { s ^ (0b11 << e) } else { s };
                next[to] += share * p;
            }
        }
        std::mem::swap(&mut dist, &mut next);
    }
    Ok((out, tail))
}

fn window_count(state: usize, lo: i64, x: i64, w: i64) -> u32 {
    (x..x + w).filter(|&y| y >= lo && y - lo < 64).map(|y| ((state >> (y - lo)) & 1) as u32).sum()
}

/// E_η[exp(λ Σ_{y∈[x,x+w)} ξ_t(y))] for the exclusion process on the closed window of `eta`.
/// The truncation error is at most `DEFAULT_TOL`.
pub fn ssep_exp_moment_exact(eta: &Configuration, x: i64, w: i64, t: f64, lambda: f64) -> Result<f64> {
    let fmax = (lambda.max(0.0) * w.max(0) as f64).exp();
    let (dist, _) = ssep_distribution(eta, t, DEFAULT_TOL / fmax)?;
    Ok(moment_from(&dist, eta.lo(), x, w, lambda))
}

fn moment_from(dist: &[f64], lo: i64, x: i64, w: i64, lambda: f64) -> f64 {
    dist.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| p * (lambda * window_count(s, lo, x, w) as f64).exp())
        .sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationInstance {
    pub config: String,
    pub x: i64,
    pub w: i64,
    pub t: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationReport {
    pub sites: usize,
    pub particle_budget: usize,
    pub jump_rate: f64,
    pub slack: f64,
    pub configurations: usize,
    pub instances: usize,
    pub violations: Vec<DominationInstance>,
    /// Instance with the smallest rhs − lhs.
    pub tightest: Option<DominationInstance>,
    /// Largest |lhs − rhs| over single-particle configurations (should be ~0).
    pub single_particle_gap: f64,
}

impl DominationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every configuration on `[lo, hi]` with at most `budget` particles, every interval inside
/// the window, every `t` and `λ`: exclusion moment ≤ independent-walker moment + slack.
pub fn domination_check(lo: i64, hi: i64, budget: usize, t_set: &[f64], lambda_set: &[f64], slack: f64) -> Result<DominationReport> {
    let n = (hi - lo + 1).max(0) as usize;
    if n == 0 || n > MAX_EXACT_SITES {
        return Err(Error::Resource(format!("window of {n} sites outside 1..={MAX_EXACT_SITES}")));
    }
    let kernels: Vec<SrwKernel> = t_set.iter().map(|&t| SrwKernel::closed(t, lo, hi, DEFAULT_TOL)).collect::<Result<_>>()?;
    let configs: Vec<usize> = (0..1usize << n).filter(|s| s.count_ones() as usize <= budget).collect();
    let per_config: Vec<Vec<DominationInstance>> = configs
        .par_iter()
        .map(|&s| -> Result<Vec<DominationInstance>> {
            let occ: Vec<u8> = (0..n).map(|i| ((s >> i) & 1) as u8).collect();
            let eta = Configuration::from_sites(lo, occ.clone())?;
            let walkers: Vec<i64> = (0..n).filter(|&i| occ[i] == 1).map(|i| lo + i as i64).collect();
            let label: String = occ.iter().map(|v| char::from(b'0' + v)).collect();
            let mut out = Vec::new();
            for (ti, &t) in t_set.iter().enumerate() {
                let fmax = (lambda_set.iter().cloned().fold(0.0, f64::max) * n as f64).exp();
                let (dist, _) = ssep_distribution(&eta, t, DEFAULT_TOL / fmax)?;
                for &lambda in lambda_set {
                    for x in lo..=hi {
                        for w in 1..=hi - x + 1 {
                            let lhs = moment_from(&dist, lo, x, w, lambda);
                            let rhs = exp_moment_isrw_exact(&walkers, x, w, &kernels[ti], lambda);
                            out.push(DominationInstance { config: label.clone(), x, w, t, lambda, lhs, rhs, margin: rhs - lhs });
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut instances = 0;
    let mut violations = Vec::new();
    let mut tightest: Option<DominationInstance> = None;
    let mut single_gap = 0.0f64;
    for (s, rows) in configs.iter().zip(per_config) {
        for inst in rows {
            instances += 1;
            if s.count_ones() <= 1 {
                single_gap = single_gap.max(inst.margin.abs());
            }
            if inst.lhs > inst.rhs + slack {
                violations.push(inst.clone());
            }
            if s.count_ones() >= 2 && tightest.as_ref().is_none_or(|b| inst.margin < b.margin) {
                tightest = Some(inst);
            }
        }
    }
    Ok(DominationReport {
        sites: n,
        particle_budget: budget,
        jump_rate: super::kernel::JUMP_RATE,
        slack,
        configurations: configs.len(),
        instances,
        violations,
        tightest,
        single_particle_gap: single_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let k = SrwKernel::infinite(1.0, DEFAULT_TOL).unwrap();
        assert_eq!(exp_moment_isrw_exact(&[], 0, 3, &k, 0.7), 1.0);
        let one = exp_moment_isrw_exact(&[2], 0, 3, &k, 0.7);
        assert!((one - (1.0 + 0.7f64.exp_m1() * k.prob_in(2, 0, 3))).abs() < 1e-15);
        let eta = Configuration::from_sites(0, vec![1, 0, 1, 1, 0]).unwrap();
        let m0 = ssep_exp_moment_exact(&eta, 1, 3, 0.0, 0.5).unwrap();
        assert!((m0 - (0.5f64 * 2.0).exp()).abs() < 1e-14);
        assert!((ssep_exp_moment_exact(&eta, 1, 3, 1.3, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_below_exponential_bound() {
        let k = SrwKernel::infinite(2.0, DEFAULT_TOL).unwrap();
        let walkers = [-3, -1, 0, 0, 2, 5];
        for lambda in [0.1, 0.5, 1.0, 3.0] {
            for x in -4..4 {
                let p = exp_moment_isrw_exact(&walkers, x, 3, &k, lambda);
                let b = exp_moment_isrw_bound(&walkers, x, 3, &k, lambda);
                assert!(p <= b, "{lambda} {x}");
            }
        }
    }

    #[test]
    fn single_particle_is_a_walk() {
        let (lo, hi) = (0, 6);
        let k = SrwKernel::closed(1.7, lo, hi, DEFAULT_TOL).unwrap();
        for start in lo..=hi {
            let mut occ = vec![0u8; 7];
            occ[start as usize] = 1;
            let eta = Configuration::from_sites(lo, occ).unwrap();
            let (dist, err) = ssep_distribution(&eta, 1.7, DEFAULT_TOL).unwrap();
            assert!(err <= DEFAULT_TOL);
            for z in lo..=hi {
                assert!((dist[1 << z] - k.prob(start, z)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn particle_number_conserved() {
        let eta = Configuration::from_sites(3, vec![1, 1, 0, 0, 1, 0]).unwrap();
        let (dist, _) = ssep_distribution(&eta, 2.0, DEFAULT_TOL).unwrap();
        let total: f64 = dist.iter().sum();
        assert!((total - 1.0).abs() < 1e-11);
        for (s, &p) in dist.iter().enumerate() {
            if s.count_ones() != 3 {
                assert_eq!(p, 0.0);
            }
        }
    }

    #[test]
    fn small_domination_sweep() {
        let rep = domination_check(0, 3, 2, &[0.5, 1.0], &[0.5], 1e-9).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations.first());
        assert!(rep.single_particle_gap < 1e-10);
        assert_eq!(rep.configurations, 1 + 4 + 6);
    }

    #[test]
    fn too_many_sites() {
        let eta = Configuration::from_sites(0, vec![0; 11]).unwrap();
        assert!(matches!(ssep_exp_moment_exact(&eta, 0, 2, 1.0, 1.0), Err(Error::Resource(_))));
    }
}
