//! Pilot-calibrated acceptance thresholds.
//!
//! The checked-in file is produced by `ssepwalk experiment pilot --out crates/core/calibration`
//! with the pilot seed, which differs from every certification seed.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

const DESK: &str = include_str!("../../calibration/desk.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub schema_version: u32,
    pub command: String,
    pub pilot_seed: u64,
    /// Physics the speed floors were calibrated for.
    pub rho: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub speed_horizon: f64,
    pub speed_replicas: usize,
    /// Replica count of the certification run the floors are sized for.
    pub target_replicas: usize,
    pub particle_fraction_mean: f64,
    pub particle_fraction_se: f64,
    pub hole_fraction_mean: f64,
    pub hole_fraction_se: f64,
    pub floor_particle: f64,
    pub floor_hole: f64,
    pub decay_replicas: usize,
    /// Conservative pilot ratio P̂(bad, r=1)/P̂(bad, r=2) (Wilson lower over Wilson upper).
    pub bad_ratio_lower: f64,
    pub bad_factor: f64,
    pub ls_ratio_lower: f64,
    pub ls_factor: f64,
}

impl Calibration {
    pub fn desk() -> Result<Self> {
        serde_json::from_str(DESK).map_err(|e| Error::InvalidArgument(format!("calibration file: {e}")))
    }

    /// Do the speed floors apply to this configuration?
    pub fn matches_speed(&self, cfg: &ExperimentConfig) -> bool {
        cfg.environment == "bernoulli"
            && cfg.rho == self.rho
            && cfg.alpha0 == self.alpha0
            && cfg.beta0 == self.beta0
            && cfg.alpha1 == self.alpha1
            && cfg.beta1 == self.beta1
            && cfg.horizon == self.speed_horizon
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("calibration serialises");
        s.push('\n');
        s
    }
}

/// `floor(v · 1000) / 1000`.
pub fn round_down(v: f64) -> f64 {
    (v * 1000.0).floor() / 1000.0
}
