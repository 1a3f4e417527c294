use serde::{Deserialize, Serialize};

pub const Z95: f64 = 1.959_963_984_540_054;
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, se: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { n, mean, se }
    }

    /// |mean − target| ≤ k·SE.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// Proportion with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub k: usize,
    pub n: usize,
    pub p_hat: f64,
    /// Binomial standard error of p̂.
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
    pub z: f64,
}

impl Proportion {
    pub fn new(k: usize, n: usize, z: f64) -> Self {
        let (lower, upper) = wilson(k, n, z);
        let p = if n == 0 { f64::NAN } else { k as f64 / n as f64 };
        let se = if n == 0 { f64::NAN } else { (p * (1.0 - p) / n as f64).sqrt() };
        Self { k, n, p_hat: p, se, lower, upper, z }
    }
}

pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (nf, p) = (n as f64, k as f64 / n as f64);
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(s.within(2.0, 1.0));
    }

    #[test]
    fn wilson_known_values() {
        // 0 of 10 at 95%: upper = z²/(n+z²)
        let (lo, hi) = wilson(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - Z95 * Z95 / (10.0 + Z95 * Z95)).abs() < 1e-12);
        let (lo, hi) = wilson(50, 100, Z95);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
    }
}
