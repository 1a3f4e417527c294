use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parameters of one scale. Level 0 is the trivial scale `ω = Δ = 1`, `ρ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleLevel {
    pub r: u32,
    pub omega: i64,
    pub delta: i64,
    pub rho_bar: f64,
    pub rho: f64,
    /// Smallest window count that is *not* below `ρ_r ω_r`, i.e. `⌈ρ_r ω_r⌉`.
    pub dense_min: u64,
    /// ε_r = e^{−Δ_r}; may underflow to 0, `log_epsilon` is exact.
    pub epsilon: f64,
    pub log_epsilon: f64,
}

/// Certified bracket for ρ̄_∞ = Π_{k≥1}(1 − N₀^{−k/4}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductBounds {
    pub lower: f64,
    pub upper: f64,
    pub terms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub n0: u64,
    pub exponent: u32,
    pub rho_minus: f64,
    pub rho_bar_inf: ProductBounds,
    /// Whether thresholds were computed in exact rational arithmetic.
    pub exact_thresholds: bool,
    levels: Vec<ScaleLevel>,
}

/// Default exponent of the block scale `Δ_r = N₀^{E r}`.
pub const DEFAULT_EXPONENT: u32 = 6;

pub fn rho_bar_infinity(n0: u64) -> ProductBounds {
    let q = (n0 as f64).powf(-0.25);
    let mut p = 1.0f64;
    let mut qk = 1.0f64;
    let mut k = 0u32;
    loop {
        k += 1;
        qk *= q;
        p *= 1.0 - qk;
        // Π_{j>k}(1−q^j) ≥ 1 − Σ_{j>k} q^j = 1 − q^{k+1}/(1−q)
        let tail = qk * q / (1.0 - q);
        if tail < 1e-15 || k >= 100_000 {
            let slack = 1e-13; // rounding in the product
            return ProductBounds { lower: p * (1.0 - tail) * (1.0 - slack), upper: p * (1.0 + slack), terms: k };
        }
    }
}

fn fourth_root(n0: u64) -> Option<u64> {
    let m = (n0 as f64).powf(0.25).round() as u64;
    (m.checked_pow(4) == Some(n0)).then_some(m)
}

pub fn make_schedule(n0: u64, exponent: u32, rho_minus: f64, r_max: u32) -> Result<ScaleSchedule> {
    if n0 < 2 {
        return invalid(format!("N0 must be at least 2, got {n0}"));
    }
    match n0.checked_pow(exponent) {
        Some(b) if b >= 8 => {}
        _ if exponent >= 64 => return invalid("exponent too large"),
        Some(_) => return invalid(format!("need N0^E >= 8, got {n0}^{exponent}")),
        None => {}
    }
    if !(rho_minus > 0.0 && rho_minus < 1.0) {
        return invalid(format!("rho_minus must lie in (0,1), got {rho_minus}"));
    }
    let bounds = rho_bar_infinity(n0);
    let required = 1.0 - rho_minus;
    if bounds.lower < required {
        return Err(Error::ScheduleInfeasible { achieved: bounds.upper, required });
    }
    let m = fourth_root(n0);
    let mut levels = Vec::with_capacity(r_max as usize + 1);
    let mut exact_rho_bar = BigRational::one();
    let mut rho_bar = 1.0f64;
    for r in 0..=r_max {
        let omega = (n0 as i64)
            .checked_pow(r)
            .ok_or_else(|| Error::Resource(format!("omega_{r} overflows")))?;
        let delta = (n0 as i64)
            .checked_pow(exponent * r)
            .ok_or_else(|| Error::Resource(format!("Delta_{r} overflows")))?;
        if r > 0 {
            rho_bar *= 1.0 - (n0 as f64).powf(-(r as f64) / 4.0);
        }
        let dense_min = match m {
            Some(m) => {
                if r > 0 {
                    let mk = BigInt::from(m).pow(r);
                    exact_rho_bar *= BigRational::new(mk.clone() - 1, mk);
                }
                let thr = (BigRational::one() - exact_rho_bar.clone()) * BigRational::from_integer(BigInt::from(omega));
                thr.ceil().to_integer().to_u64().expect("threshold fits u64")
            }
            None => {
                let v = omega as f64 * (1.0 - rho_bar);
                let frac = (v - v.round()).abs();
                if r > 0 && frac < 1e-9 * v.max(1.0) {
                    return Err(Error::Resource(format!(
                        "threshold rho_{r} omega_{r} = {v} too close to an integer for f64"
                    )));
                }
                if r == 0 {
                    0
                } else {
                    v.ceil() as u64
                }
            }
        };
        let log_epsilon = -(delta as f64);
        levels.push(ScaleLevel {
            r,
            omega,
            delta,
            rho_bar,
            rho: 1.0 - rho_bar,
            dense_min,
            epsilon: log_epsilon.exp(),
            log_epsilon,
        });
    }
    Ok(ScaleSchedule { n0, exponent, rho_minus, rho_bar_inf: bounds, exact_thresholds: m.is_some(), levels })
}

impl ScaleSchedule {
    pub fn r_max(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn level(&self, r: u32) -> Result<&ScaleLevel> {
        self.levels
            .get(r as usize)
            .ok_or_else(|| Error::InvalidArgument(format!("scale {r} beyond r_max = {}", self.r_max())))
    }

    pub fn levels(&self) -> &[ScaleLevel] {
        &self.levels
    }

    pub fn delta(&self, r: u32) -> Result<i64> {
        Ok(self.level(r)?.delta)
    }

    /// `count < ρ_r ω_r`, decided exactly.
    pub fn is_rarefied_count(&self, count: u64, r: u32) -> Result<bool> {
        Ok(count < self.level(r)?.dense_min)
    }

    /// ρ̄_+ = 1 − ρ_−.
    pub fn rho_bar_plus(&self) -> f64 {
        1.0 - self.rho_minus
    }

    /// N₀^{2E}: number of r-blocks in an (r+1)-block.
    pub fn children_per_block(&self) -> u64 {
        self.n0.pow(2 * self.exponent)
    }
}

impl ScaleLevel {
    pub fn rho_omega(&self) -> f64 {
        self.rho * self.omega as f64
    }

    pub fn is_zero_threshold(&self) -> bool {
        self.dense_min.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_exponent_values() {
        let s = make_schedule(2, 6, 0.9996, 2).unwrap();
        let l1 = s.level(1).unwrap();
        assert_eq!((l1.omega, l1.delta), (2, 64));
        assert_eq!(s.delta(2).unwrap(), 4096);
        assert!((l1.rho_bar - (1.0 - 2f64.powf(-0.25))).abs() < 1e-15);
        assert!((l1.rho_bar - 0.159104).abs() < 1e-6);
    }

    #[test]
    fn desk_thresholds() {
        let s = make_schedule(2, 3, 0.9996, 3).unwrap();
        assert_eq!(s.delta(1).unwrap(), 8);
        assert_eq!(s.delta(2).unwrap(), 64);
        // rho_1 omega_1 = 2 * 2^{-1/4} = 1.68..., so a pair with one particle is rarefied
        assert_eq!(s.level(1).unwrap().dense_min, 2);
        assert_eq!(s.level(2).unwrap().dense_min, 4);
        assert_eq!(s.level(0).unwrap().dense_min, 0);
        assert!(!s.exact_thresholds);
    }

    #[test]
    fn exact_thresholds_for_fourth_powers() {
        let s = make_schedule(16, 1, 0.72, 3).unwrap();
        assert!(s.exact_thresholds);
        // rho_1 = 1/2, rho_2 = 1 - (1/2)(3/4) = 5/8: thresholds exactly 8 and 160
        assert_eq!(s.level(1).unwrap().dense_min, 8);
        assert_eq!(s.level(2).unwrap().dense_min, 160);
        assert!(!s.is_rarefied_count(8, 1).unwrap());
        assert!(s.is_rarefied_count(7, 1).unwrap());
    }

    #[test]
    fn feasibility() {
        let b = rho_bar_infinity(2);
        assert!(b.lower <= b.upper && (b.upper - 4.5743e-4).abs() < 1e-7);
        match make_schedule(2, 3, 0.5, 2) {
            Err(Error::ScheduleInfeasible { achieved, .. }) => assert!(achieved < 1e-3),
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(make_schedule(2, 2, 0.9996, 2).is_err()); // 2^2 < 8
        assert!(make_schedule(1, 6, 0.9, 2).is_err());
        assert!(make_schedule(2, 3, 1.0, 2).is_err());
    }

    #[test]
    fn monotone_and_ordered() {
        let s = make_schedule(8, 1, 0.86, 4).unwrap();
        for w in s.levels().windows(2) {
            assert!(w[1].rho > w[0].rho);
            assert!(w[1].omega <= w[1].delta);
            assert!(w[1].epsilon < 1.0);
        }
        assert_eq!(s.children_per_block(), 64);
    }
}
