use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::scales::{make_schedule, ScaleSchedule};
use crate::walker::RateSet;

/// Flat experiment configuration. Every key has a default, so a config file only needs the
/// keys it changes; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Environment preset name (see `environment::presets`).
    pub environment: String,
    pub rho: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Block schedule knobs: N₀, E, ρ₋.
    pub n0: u64,
    pub exponent: u32,
    pub rho_minus: f64,
    pub r_star: u32,
    /// Path length from which the rough-block count bound is expected to hold.
    pub ell_star: f64,
    /// Second schedule for the decay curves of bad and locally spoiled blocks.
    pub decay_n0: u64,
    pub decay_exponent: u32,
    pub decay_rho_minus: f64,
    pub decay_rho: f64,
    pub stuck_replicas: usize,
    pub ls_replicas: usize,
    pub pareto_index: f64,
    pub control_index: f64,
    pub horizons: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "speed".into(),
            environment: "bernoulli".into(),
            rho: 0.5,
            alpha0: 0.5,
            beta0: 0.5,
            alpha1: 0.9,
            beta1: 0.1,
            horizon: 2000.0,
            replicas: 100,
            seed: 42,
            n0: 2,
            exponent: 3,
            rho_minus: 0.9996,
            r_star: 1,
            ell_star: 100.0,
            decay_n0: 8,
            decay_exponent: 1,
            decay_rho_minus: 0.86,
            decay_rho: 0.96,
            stuck_replicas: 4000,
            ls_replicas: 40,
            pareto_index: 1.5,
            control_index: 3.0,
            horizons: vec![1e3, 1e4, 1e5],
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.rates()?;
        if self.replicas == 0 {
            return invalid("replica count must be >= 1");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) || !(self.decay_rho > 0.0 && self.decay_rho < 1.0) {
            return invalid("densities must lie in (0, 1)");
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return invalid(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.ell_star > 1.0) || !self.ell_star.is_finite() {
            return invalid(format!("ell_star must exceed 1, got {}", self.ell_star));
        }
        if self.horizons.iter().any(|&t| !(t > 0.0)) {
            return invalid("static-demo horizons must be positive");
        }
        Ok(())
    }

    pub fn rates(&self) -> Result<RateSet> {
        RateSet::new(self.alpha0, self.beta0, self.alpha1, self.beta1)
    }

    pub fn schedule(&self, r_max: u32) -> Result<ScaleSchedule> {
        make_schedule(self.n0, self.exponent, self.rho_minus, r_max)
    }

    pub fn decay_schedule(&self, r_max: u32) -> Result<ScaleSchedule> {
        make_schedule(self.decay_n0, self.decay_exponent, self.decay_rho_minus, r_max)
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_and_hash() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "decay", "replicas": 7}"#).unwrap();
        assert_eq!(cfg.replicas, 7);
        assert_eq!(cfg.rho, 0.5);
        assert_ne!(cfg.hash(), ExperimentConfig::default().hash());
        assert_eq!(cfg.hash(), ExperimentConfig::from_json(&cfg.to_json()).unwrap().hash());
        assert!(ExperimentConfig::from_json(r#"{"replicas": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"beta1": 0.5}"#).is_err());
    }
}
