//! The walk on top of the environment: one rate-γ clock, one uniform mark per clock ring.
//!
//! At the k-th ring the walker reads `i = ξ_τ(W_{τ−})` and steps right iff
//! `U_k < α_i/γ`. Replaying the same clock and uniforms with `i` forced to 0 or 1 gives
//! the lower and upper homogeneous walks, which sandwich `W` pathwise.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl RateSet {
    pub fn new(alpha0: f64, beta0: f64, alpha1: f64, beta1: f64) -> Result<Self> {
        let r = Self { alpha0, beta0, alpha1, beta1 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha0, self.beta0, self.alpha1, self.beta1];
        if all.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return invalid(format!("all jump rates must be positive: {self:?}"));
        }
        let (g0, g1) = (self.alpha0 + self.beta0, self.alpha1 + self.beta1);
        if (g0 - g1).abs() > 1e-12 * g1 {
            return invalid(format!("total jump rates differ: {g0} vs {g1}"));
        }
        if self.v(1) <= self.v(0) {
            return invalid(format!("need v1 > v0, got v0={} v1={}", self.v(0), self.v(1)));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.alpha1 + self.beta1
    }

    /// Drift on state `i`: `α_i − β_i`.
    pub fn v(&self, i: u8) -> f64 {
        if i == 1 {
            self.alpha1 - self.beta1
        } else {
            self.alpha0 - self.beta0
        }
    }

    /// Probability of a right step on state `i`.
    pub fn right_prob(&self, i: u8) -> f64 {
        if i == 1 {
            self.alpha1 / self.gamma()
        } else {
            self.alpha0 / self.gamma()
        }
    }

    /// J^i for uniform mark `u`.
    pub fn step(&self, i: u8, u: f64) -> i64 {
        if u < self.right_prob(i) {
            1
        } else {
            -1
        }
    }
}

/// Clock ring times on `(0, T]` and the uniform attached to each ring.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkSequences {
    pub clock: Vec<f64>,
    pub uniforms: Vec<f64>,
}

impl MarkSequences {
    pub fn sample(gamma: f64, horizon: f64, clock_seed: u64, mark_seed: u64) -> Result<Self> {
        let exp = Exp::new(gamma).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        let mut crng = stream_rng(clock_seed, 0);
        let mut clock = Vec::new();
        let mut t = 0.0;
        loop {
            let next = t + exp.sample(&mut crng);
            if next > horizon {
                break;
            }
            if next > t {
                clock.push(next);
                t = next;
            }
        }
        let mut mrng = stream_rng(mark_seed, 0);
        let uniforms = clock.iter().map(|_| mrng.random::<f64>()).collect();
        Ok(Self { clock, uniforms })
    }

    /// J^i_k.
    pub fn mark(&self, rates: &RateSet, i: u8, k: usize) -> i64 {
        rates.step(i, self.uniforms[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub before: i64,
    pub after: i64,
    pub env_state: u8,
    pub mark_index: usize,
}

#[derive(Debug, Clone)]
pub struct WalkPath {
    pub rates: RateSet,
    pub horizon: f64,
    pub jumps: Vec<JumpRecord>,
    pub marks: MarkSequences,
}

/// Seeds of the clock and mark streams derived from one walk seed.
pub fn walk_seeds(seed: u64) -> (u64, u64) {
    (derive_seed(seed, 0xC10C), derive_seed(seed, 0x3A2C))
}

pub fn simulate_walk(env: &dyn Environment, rates: &RateSet, horizon: f64, seed: u64) -> Result<WalkPath> {
    let (c, m) = walk_seeds(seed);
    simulate_walk_with_seeds(env, rates, horizon, c, m)
}

pub fn simulate_walk_with_seeds(
    env: &dyn Environment,
    rates: &RateSet,
    horizon: f64,
    clock_seed: u64,
    mark_seed: u64,
) -> Result<WalkPath> {
    rates.validate()?;
    if !(horizon > 0.0) || horizon > env.horizon() {
        return invalid(format!("walk horizon {horizon} must lie in (0, {}]", env.horizon()));
    }
    let marks = MarkSequences::sample(rates.gamma(), horizon, clock_seed, mark_seed)?;
    let mut jumps = Vec::with_capacity(marks.clock.len());
    let mut pos = 0i64;
    for (k, &tau) in marks.clock.iter().enumerate() {
        let i = env.occupancy(pos, tau)?;
        let after = pos + marks.mark(rates, i, k);
        jumps.push(JumpRecord { time: tau, before: pos, after, env_state: i, mark_index: k });
        pos = after;
    }
    Ok(WalkPath { rates: *rates, horizon, jumps, marks })
}

/// Speed functionals at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFunctionals {
    pub speed: f64,
    pub particle_jump_fraction: f64,
    pub hole_jump_fraction: f64,
    pub length: f64,
}

impl WalkPath {
    fn jumps_until(&self, t: f64) -> usize {
        self.jumps.partition_point(|j| j.time <= t)
    }

    /// W_t (right-continuous).
    pub fn position(&self, t: f64) -> i64 {
        match self.jumps_until(t) {
            0 => 0,
            n => self.jumps[n - 1].after,
        }
    }

    pub fn final_position(&self) -> i64 {
        self.position(self.horizon)
    }

    /// N_t.
    pub fn clock_count(&self, t: f64) -> usize {
        self.marks.clock.partition_point(|&c| c <= t)
    }

    /// (N¹_t, N⁰_t).
    pub fn jump_counts(&self, t: f64) -> (usize, usize) {
        let n = self.jumps_until(t);
        let n1 = self.jumps[..n].iter().filter(|j| j.env_state == 1).count();
        (n1, n - n1)
    }

    /// Rebuilds S¹ and S⁰ from the consumed marks and checks `W = S¹_{N¹} + S⁰_{N⁰}` after
    /// every jump, together with the record invariants.
    pub fn verify_representation(&self) -> bool {
        let (mut s1, mut s0) = (0i64, 0i64);
        let mut prev_time = 0.0;
        let mut prev_pos = 0i64;
        for (k, j) in self.jumps.iter().enumerate() {
            if j.mark_index != k || j.before != prev_pos || (j.after - j.before).abs() != 1 {
                return false;
            }
            if k > 0 && j.time <= prev_time {
                return false;
            }
            let mark = self.marks.mark(&self.rates, j.env_state, j.mark_index);
            match j.env_state {
                1 => s1 += mark,
                0 => s0 += mark,
                _ => return false,
            }
            if j.after != s1 + s0 {
                return false;
            }
            prev_time = j.time;
            prev_pos = j.after;
        }
        self.jumps.len() == self.marks.clock.len()
    }

    fn replay_forced(&self, i: u8) -> WalkPath {
        let mut pos = 0;
        let jumps = self
            .marks
            .clock
            .iter()
            .enumerate()
            .map(|(k, &time)| {
                let after = pos + self.marks.mark(&self.rates, i, k);
                let rec = JumpRecord { time, before: pos, after, env_state: i, mark_index: k };
                pos = after;
                rec
            })
            .collect();
        WalkPath { rates: self.rates, horizon: self.horizon, jumps, marks: self.marks.clone() }
    }

    /// (lower, upper): the same clock and uniforms with the state forced to 0 and to 1.
    pub fn sandwich_walks(&self) -> (WalkPath, WalkPath) {
        (self.replay_forced(0), self.replay_forced(1))
    }

    /// Number of clock rings at which `lower ≤ W ≤ upper` fails (checked after every ring,
    /// which covers all times since the three paths are constant in between).
    pub fn sandwich_violations(&self) -> usize {
        let (lo, up) = self.sandwich_walks();
        self.jumps
            .iter()
            .zip(lo.jumps.iter().zip(up.jumps.iter()))
            .filter(|(w, (l, u))| !(l.after <= w.after && w.after <= u.after))
            .count()
    }

    pub fn speed_functionals(&self) -> SpeedFunctionals {
        let t = self.horizon;
        let g = self.rates.gamma();
        let (n1, n0) = self.jump_counts(t);
        SpeedFunctionals {
            speed: self.final_position() as f64 / t,
            particle_jump_fraction: n1 as f64 / (g * t),
            hole_jump_fraction: n0 as f64 / (g * t),
            length: t + self.clock_count(t) as f64,
        }
    }

    /// Y_{s+1} = 1{N¹_{s+1} > N¹_s} for s = 0, …, ⌊T⌋−1.
    pub fn y_indicators(&self) -> Vec<bool> {
        let steps = self.horizon.floor() as usize;
        let mut out = vec![false; steps];
        for j in self.jumps.iter().filter(|j| j.env_state == 1) {
            // jump in (s, s+1] sets Y_{s+1}
            let s = (j.time.ceil() as usize).saturating_sub(1);
            if s < steps {
                out[s] = true;
            }
        }
        out
    }

    /// `t,W_t,env_state` rows, one per jump, starting with the origin.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,w,env_state\n0,0,\n");
        for j in &self.jumps {
            let _ = writeln!(s, "{},{},{}", j.time, j.after, j.env_state);
        }
        s
    }

    pub fn summary_json(&self, seed: u64) -> serde_json::Value {
        let (n1, n0) = self.jump_counts(self.horizon);
        let f = self.speed_functionals();
        serde_json::json!({
            "T": self.horizon,
            "N": n1 + n0,
            "N1": n1,
            "N0": n0,
            "W_T": self.final_position(),
            "ell_T": f.length,
            "seed": seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::ConstantEnvironment;

    fn rates() -> RateSet {
        RateSet::new(0.5, 0.5, 0.9, 0.1).unwrap()
    }

    #[test]
    fn rate_invariants() {
        assert!(RateSet::new(0.5, 0.5, 0.9, 0.1).is_ok());
        assert!(RateSet::new(0.5, 0.5, 0.9, 0.2).is_err());
        assert!(RateSet::new(0.5, 0.5, 1.0, 0.0).is_err());
        assert!(RateSet::new(0.6, 0.4, 0.4, 0.6).is_err());
        let r = rates();
        assert!((r.gamma() - 1.0).abs() < 1e-15);
        assert!((r.v(1) - 0.8).abs() < 1e-15 && r.v(0) == 0.0);
    }

    #[test]
    fn constant_environments() {
        let ones = ConstantEnvironment::new(1, -1000, 1000, 100.0).unwrap();
        let zeros = ConstantEnvironment::new(0, -1000, 1000, 100.0).unwrap();
        for seed in 0..20 {
            let p = simulate_walk(&ones, &rates(), 100.0, seed).unwrap();
            let (lo, up) = p.sandwich_walks();
            assert_eq!(p.jump_counts(100.0).1, 0);
            assert_eq!(up.final_position(), p.final_position());
            assert!(p.verify_representation());
            let q = simulate_walk(&zeros, &rates(), 100.0, seed).unwrap();
            assert_eq!(q.jump_counts(100.0).0, 0);
            assert_eq!(q.sandwich_walks().0.final_position(), q.final_position());
            assert!(lo.final_position() <= p.final_position());
        }
    }

    #[test]
    fn empty_path() {
        let env = ConstantEnvironment::new(1, -10, 10, 1.0).unwrap();
        let p = WalkPath {
            rates: rates(),
            horizon: 1.0,
            jumps: vec![],
            marks: MarkSequences { clock: vec![], uniforms: vec![] },
        };
        assert!(p.verify_representation());
        assert_eq!(p.final_position(), 0);
        let f = p.speed_functionals();
        assert_eq!((f.speed, f.particle_jump_fraction, f.hole_jump_fraction, f.length), (0.0, 0.0, 0.0, 1.0));
        assert!(simulate_walk(&env, &rates(), 2.0, 1).is_err());
    }

    #[test]
    fn determinism_and_length() {
        let env = ConstantEnvironment::new(1, -1000, 1000, 50.0).unwrap();
        let a = simulate_walk(&env, &rates(), 50.0, 9).unwrap();
        let b = simulate_walk(&env, &rates(), 50.0, 9).unwrap();
        assert_eq!(a.jumps, b.jumps);
        let f = a.speed_functionals();
        assert_eq!(f.length, 50.0 + a.jumps.len() as f64);
        let y = a.y_indicators();
        assert_eq!(y.len(), 50);
        assert!(y.iter().filter(|&&v| v).count() <= a.jump_counts(50.0).0);
    }

    #[test]
    fn leaving_the_environment_is_an_error() {
        let env = ConstantEnvironment::new(1, -2, 2, 200.0).unwrap();
        assert!(simulate_walk(&env, &rates(), 200.0, 3).is_err());
    }
}
