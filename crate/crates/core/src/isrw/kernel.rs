//! Continuous-time SRW transition kernels by uniformization.
//!
//! The walk jumps at total rate 2 (rate 1 per direction), so S_t is a discrete ±1 walk run
//! for a Poisson(2t) number of steps. On a closed window a jump that would leave the
//! window is suppressed, which is exactly what one exclusion particle does when the
//! boundary edges are missing.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Total jump rate of one walker.
pub const JUMP_RATE: f64 = 2.0;

/// Largest number of uniformized steps before giving up.
pub const MAX_STEPS: usize = 100_000;

/// Default per-entry truncation error.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Poisson(λ) weights `w_0..=w_N` with `P(Pois > N) ≤ tail ≤ tol`.
///
/// The tail bound is `w_{N+1} / (1 − λ/(N+2))`, valid once `N + 2 > λ` (ratios of
/// successive weights are then below λ/(N+2)).
pub fn poisson_weights(lambda: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return invalid(format!("poisson mean must be finite and >= 0, got {lambda}"));
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    if lambda == 0.0 {
        return Ok((vec![1.0], 0.0));
    }
    let ln_l = lambda.ln();
    let mut ln_fact = 0.0;
    let mut w = Vec::new();
    for n in 0..=MAX_STEPS {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        w.push((-lambda + n as f64 * ln_l - ln_fact).exp());
        let next = n + 1;
        if (next as f64 + 1.0) > lambda {
            let ln_next = -lambda + next as f64 * ln_l - (ln_fact + (next as f64).ln());
            let tail = ln_next.exp() / (1.0 - lambda / (next as f64 + 1.0));
            if tail <= tol && next as f64 > lambda {
                return Ok((w, tail));
            }
        }
    }
    Err(Error::Resource(format!(
        "poisson({lambda}) tail does not reach {tol:e} within {MAX_STEPS} steps"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelDomain {
    /// The whole lattice ℤ; stored as displacement probabilities.
    Infinite,
    /// Sites `lo..=hi` with no edges leaving the window.
    Closed { lo: i64, hi: i64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SrwKernel {
    pub t: f64,
    pub domain: KernelDomain,
    pub steps: usize,
    /// Bound on the error of every entry.
    pub error: f64,
    // Infinite: pmf of the displacement on -steps..=steps. Closed: row-major n×n matrix.
    data: Vec<f64>,
}

impl SrwKernel {
    pub fn infinite(t: f64, tol: f64) -> Result<Self> {
        check_t(t)?;
        let (w, tail) = poisson_weights(JUMP_RATE * t, tol)?;
        let n = w.len() - 1;
        let width = 2 * n + 1;
        let mut dist = vec![0.0; width];
        let mut next = vec![0.0; width];
        let mut pmf = vec![0.0; width];
        dist[n] = 1.0;
        for (step, &wk) in w.iter().enumerate() {
            // after `step` steps the support is n-step..=n+step with the parity of step
            let lo = n - step;
            let hi = n + step;
            for i in (lo..=hi).step_by(2) {
                pmf[i] += wk * dist[i];
            }
            if step == n {
                break;
            }
            for v in next[lo.saturating_sub(1)..=(hi + 1).min(width - 1)].iter_mut() {
                *v = 0.0;
            }
            for i in (lo..=hi).step_by(2) {
                let h = 0.5 * dist[i];
                next[i - 1] += h;
                next[i + 1] += h;
            }
            std::mem::swap(&mut dist, &mut next);
        }
        Ok(Self { t, domain: KernelDomain::Infinite, steps: n, error: tail, data: pmf })
    }

    pub fn closed(t: f64, lo: i64, hi: i64, tol: f64) -> Result<Self> {
        check_t(t)?;
        if lo > hi {
            return invalid(format!("empty window [{lo}, {hi}]"));
        }
        let m = (hi - lo + 1) as usize;
        if m > 4096 {
            return Err(Error::Resource(format!("closed kernel on {m} sites is too large")));
        }
        let (w, tail) = poisson_weights(JUMP_RATE * t, tol)?;
        let mut out = vec![0.0; m * m];
        // evolve every start site at once: rows are start sites
        let mut dist = vec![0.0; m * m];
        for y in 0..m {
            dist[y * m + y] = 1.0;
        }
        let mut next = vec![0.0; m * m];
        for (step, &wk) in w.iter().enumerate() {
            for (o, d) in out.iter_mut().zip(&dist) {
                *o += wk * d;
            }
            if step + 1 == w.len() {
                break;
            }
            for y in 0..m {
                let row = &dist[y * m..(y + 1) * m];
                let nrow = &mut next[y * m..(y + 1) * m];
                nrow.fill(0.0);
                for z in 0..m {
                    let h = 0.5 * row[z];
                    if h == 0.0 {
                        continue;
                    }
                    if z == 0 { nrow[z] += h } else { nrow[z - 1] += h }
                    if z + 1 == m { nrow[z] += h } else { nrow[z + 1] += h }
                }
            }
            std::mem::swap(&mut dist, &mut next);
        }
        Ok(Self { t, domain: KernelDomain::Closed { lo, hi }, steps: w.len() - 1, error: tail, data: out })
    }

    /// P(S^y_t = z).
    pub fn prob(&self, y: i64, z: i64) -> f64 {
        match self.domain {
            KernelDomain::Infinite => self.displacement(z - y),
            KernelDomain::Closed { lo, hi } => {
                if y < lo || y > hi || z < lo || z > hi {
                    return 0.0;
                }
                let m = (hi - lo + 1) as usize;
                self.data[(y - lo) as usize * m + (z - lo) as usize]
            }
        }
    }

    /// P(S^0_t = k) on the infinite lattice (0 beyond the truncated support).
    pub fn displacement(&self, k: i64) -> f64 {
        debug_assert_eq!(self.domain, KernelDomain::Infinite);
        let n = self.steps as i64;
        if k.abs() > n {
            0.0
        } else {
            self.data[(k + n) as usize]
        }
    }

    /// P(S^y_t ∈ [a, b)).
    pub fn prob_in(&self, y: i64, a: i64, b: i64) -> f64 {
        match self.domain {
            KernelDomain::Infinite => {
                let n = self.steps as i64;
                let (lo, hi) = ((a - y).max(-n), (b - y - 1).min(n));
                if lo > hi {
                    return 0.0;
                }
                self.data[(lo + n) as usize..=(hi + n) as usize].iter().sum()
            }
            KernelDomain::Closed { .. } => (a..b).map(|z| self.prob(y, z)).sum(),
        }
    }

    /// P(|S^0_t| > a) on the infinite lattice.
    pub fn abs_tail(&self, a: f64) -> f64 {
        let n = self.steps as i64;
        (-n..=n).filter(|&k| (k as f64).abs() > a).map(|k| self.displacement(k)).sum()
    }

    /// Support: `-steps..=steps` for the lattice kernel, the window otherwise.
    pub fn support(&self) -> (i64, i64) {
        match self.domain {
            KernelDomain::Infinite => (-(self.steps as i64), self.steps as i64),
            KernelDomain::Closed { lo, hi } => (lo, hi),
        }
    }

    /// `y,z,p` rows; for the lattice kernel `y = 0`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("y,z,p\n");
        match self.domain {
            KernelDomain::Infinite => {
                let n = self.steps as i64;
                for k in -n..=n {
                    let p = self.displacement(k);
                    if p > 0.0 {
                        let _ = writeln!(s, "0,{k},{p:e}");
                    }
                }
            }
            KernelDomain::Closed { lo, hi } => {
                for y in lo..=hi {
                    for z in lo..=hi {
                        let _ = writeln!(s, "{y},{z},{:e}", self.prob(y, z));
                    }
                }
            }
        }
        s
    }
}

/// `window = None` for the lattice kernel.
pub fn srw_kernel(t: f64, window: Option<(i64, i64)>, tol: f64) -> Result<SrwKernel> {
    match window {
        None => SrwKernel::infinite(t, tol),
        Some((lo, hi)) => SrwKernel::closed(t, lo, hi, tol),
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return invalid(format!("time must be finite and >= 0, got {t}"));
    }
    Ok(())
}
