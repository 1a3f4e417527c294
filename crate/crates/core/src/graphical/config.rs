use rand::Rng;

use super::Window;
use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;

/// Occupancy `{0,1}` of every site in `[lo, lo + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    lo: i64,
    occ: Vec<u8>,
    density: Option<f64>,
}

impl Configuration {
    /// I.i.d. Bernoulli(ρ) occupancy on the simulated region of `window`.
    pub fn sample(rho: f64, window: &Window, seed: u64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return invalid(format!("density must lie in (0,1), got {rho}"));
        }
        let mut rng = stream_rng(seed, 0);
        let occ = (0..window.n_sites()).map(|_| u8::from(rng.random::<f64>() < rho)).collect();
        Ok(Self { lo: window.lo(), occ, density: Some(rho) })
    }

    pub fn all_ones(window: &Window) -> Self {
        Self { lo: window.lo(), occ: vec![1; window.n_sites()], density: None }
    }

    pub fn all_zeros(window: &Window) -> Self {
        Self { lo: window.lo(), occ: vec![0; window.n_sites()], density: None }
    }

    pub fn from_sites(lo: i64, occ: Vec<u8>) -> Result<Self> {
        if occ.iter().any(|&v| v > 1) {
            return invalid("occupancy values must be 0 or 1");
        }
        Ok(Self { lo, occ, density: None })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.occ.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    /// Density parameter the configuration was sampled with, if any.
    pub fn density(&self) -> Option<f64> {
        self.density
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.occ
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.occ
    }

    pub fn get(&self, x: i64) -> Result<u8> {
        self.index(x).map(|i| self.occ[i])
    }

    fn index(&self, x: i64) -> Result<usize> {
        if x < self.lo || x > self.hi() {
            return Err(Error::OutOfWindow { site: x, time: f64::NAN, lo: self.lo, hi: self.hi() });
        }
        Ok((x - self.lo) as usize)
    }

    /// η^{x,y}: the configuration with the values at `x` and `y` exchanged.
    pub fn swap(&self, x: i64, y: i64) -> Result<Self> {
        let mut out = self.clone();
        out.swap_in_place(x, y)?;
        Ok(out)
    }

    pub fn swap_in_place(&mut self, x: i64, y: i64) -> Result<()> {
        let (i, j) = (self.index(x)?, self.index(y)?);
        self.occ.swap(i, j);
        Ok(())
    }

    /// η̄ = 1 − η. A sample of ν_ρ becomes a sample of ν_{1−ρ}.
    pub fn hole_complement(&self) -> Self {
        Self {
            lo: self.lo,
            occ: self.occ.iter().map(|&v| 1 - v).collect(),
            density: self.density.map(|r| 1.0 - r),
        }
    }

    pub fn particle_count(&self) -> usize {
        self.occ.iter().map(|&v| v as usize).sum()
    }

    pub fn empirical_density(&self) -> f64 {
        self.particle_count() as f64 / self.occ.len().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w() -> Window {
        Window::closed(-3, 3, 1.0).unwrap()
    }

    #[test]
    fn swap_examples() {
        let c = Configuration::from_sites(0, vec![1, 0, 1]).unwrap();
        assert_eq!(c.swap(0, 1).unwrap().as_slice(), &[0, 1, 1]);
        assert_eq!(c.swap(0, 1).unwrap().swap(0, 1).unwrap(), c);
        assert_eq!(c.swap(2, 2).unwrap(), c);
        assert!(c.swap(0, 3).is_err());
    }

    #[test]
    fn complement_examples() {
        let ones = Configuration::all_ones(&w());
        assert_eq!(ones.hole_complement(), Configuration::all_zeros(&w()));
        let c = Configuration::sample(0.3, &w(), 4).unwrap();
        assert_eq!(c.hole_complement().hole_complement().as_slice(), c.as_slice());
        assert!((c.hole_complement().density().unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn sampling_contract() {
        assert!(Configuration::sample(0.0, &w(), 1).is_err());
        assert!(Configuration::sample(1.0, &w(), 1).is_err());
        let a = Configuration::sample(0.5, &w(), 8).unwrap();
        assert_eq!(a, Configuration::sample(0.5, &w(), 8).unwrap());
        assert_eq!((a.lo(), a.hi()), (-3, 3));
    }
}
