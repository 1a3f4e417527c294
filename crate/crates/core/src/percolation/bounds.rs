use serde::{Deserialize, Serialize};

use super::animals::{connected_sets_with_origin, king_degree};
use super::system::{sampled_psi_lower_bound, HashedBernoulli};
use super::traversal::{blocks_intersected, random_polyline, Polyline};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, stream_rng};

/// Bernstein: `P(Σ(X_i − EX_i) > x) ≤ exp(−(x/2)(sup + n·var/x)^{−1})`.
pub fn bernstein_bound(n: u64, variance: f64, sup_bound: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return invalid(format!("x must be positive, got {x}"));
    }
    if n == 0 || variance < 0.0 || !(sup_bound > 0.0) {
        return invalid("need n >= 1, variance >= 0 and sup_bound > 0");
    }
    Ok((-(x / 2.0) / (sup_bound + n as f64 * variance / x)).exp())
}

/// Exact `P(Bin(n,p) − np > x)` by enumeration.
pub fn binomial_upper_tail(n: u64, p: f64, x: f64) -> f64 {
    let mean = n as f64 * p;
    let mut total = 0.0;
    for k in 0..=n {
        if k as f64 - mean - x > 1e-9 {
            total += binomial_pmf(n, k, p);
        }
    }
    total
}

fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BernsteinRow {
    pub n: u64,
    pub p: f64,
    pub x: f64,
    pub exact: f64,
    pub bound: f64,
}

/// Exact binomial tails against the bound for Bernoulli(p) summands (`sup = 1`), every integer
/// `x ∈ [1, n]`. Returns all rows; violations are rows with `exact > bound`.
pub fn bernstein_grid(ns: &[u64], ps: &[f64]) -> Result<Vec<BernsteinRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &p in ps {
            for x in 1..=n {
                let x = x as f64;
                let bound = bernstein_bound(n, p * (1.0 - p), 1.0, x)?;
                rows.push(BernsteinRow { n, p, x, exact: binomial_upper_tail(n, p, x), bound });
            }
        }
    }
    Ok(rows)
}

/// Path/cluster constants and the derived `c₂ = 2^d K₁ K₂`, `c₁ = 16 c₂`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeomConstants {
    pub d: usize,
    pub k1: u64,
    pub k2: u64,
    pub c1: f64,
    pub c2: f64,
    /// `(n, #connected n-sets containing the origin, e^{K₂ n})` for the enumerated range.
    pub animal_counts: Vec<(usize, u64, f64)>,
    /// Largest `|blocks met| / ⌈ℓ/Δ⌉` seen in the adversarial search.
    pub k1_search_max: f64,
    pub k1_witness: Vec<Vec<f64>>,
}

impl GeomConstants {
    pub fn from_parts(d: usize, k1: u64, k2: u64) -> Self {
        let c2 = (1u64 << d) as f64 * k1 as f64 * k2 as f64;
        Self { d, k1, k2, c1: 16.0 * c2, c2, animal_counts: Vec::new(), k1_search_max: 0.0, k1_witness: Vec::new() }
    }

    /// `K₁ ⌈ℓ/Δ⌉`, with `⌈·⌉` floored at 1 so the zero-length path is covered.
    pub fn k1_block_bound(&self, ell: f64, delta: f64) -> u64 {
        self.k1 * ((ell / delta).ceil() as u64).max(1)
    }
}

/// Certify `K₁ = 2^d` and `K₂` for d ∈ {1, 2}.
///
/// K₁: a path of length ≤ Δ spans at most two block columns per axis, so it meets at most
/// `2^d` blocks; a length-ℓ path splits into `⌈ℓ/Δ⌉` such pieces. A short loop around a
/// corner attains `2^d`, and a random search confirms nothing beats the bound.
///
/// K₂: smallest integer with `e^{K₂} ≥ e·D` (D = 3^d − 1 neighbours, king adjacency), the
/// standard animal growth bound, checked against exact counts for n ≤ 8.
pub fn fit_geom_constants(d: usize, delta: f64) -> Result<GeomConstants> {
    if !(1..=2).contains(&d) {
        return invalid(format!("constants are certified for d in {{1,2}} only, got {d}"));
    }
    if !(delta > 0.0) {
        return invalid("block scale must be positive");
    }
    let k1 = 1u64 << d;
    let deg = king_degree(d) as f64;
    let k2 = (1.0 + deg.ln()).ceil() as u64;
    let mut g = GeomConstants::from_parts(d, k1, k2);

    // witness: a small loop around the corner (Δ, …, Δ)
    let e = 0.05 * delta;
    let witness: Vec<Vec<f64>> = if d == 1 {
        vec![vec![delta - e], vec![delta + e]]
    } else {
        vec![
            vec![delta - e, delta - e],
            vec![delta + e, delta - e],
            vec![delta + e, delta + e],
            vec![delta - e, delta + e],
        ]
    };
    let w = Polyline::new(d, &witness)?;
    let met = blocks_intersected(&w, delta)?.len() as u64;
    if met != k1 {
        return invalid(format!("witness met {met} blocks, expected {k1}"));
    }
    g.k1_witness = witness;

    let mut rng = stream_rng(derive_seed(0x6e0, d as u64), 0);
    let mut worst = met as f64;
    for &ratio in &[0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0] {
        let ell = ratio * delta;
        for i in 0..2000 {
            let start: Vec<f64> = (0..d).map(|_| rand::Rng::random::<f64>(&mut rng) * delta).collect();
            let p = random_polyline(&mut rng, d, ell, 1 + i % 5).shifted(&start);
            let n = blocks_intersected(&p, delta)?.len() as f64;
            let denom = ((ell / delta).ceil()).max(1.0);
            worst = worst.max(n / denom);
        }
    }
    if worst > k1 as f64 {
        return invalid(format!("search found {worst} blocks per unit length, above K1 = {k1}"));
    }
    g.k1_search_max = worst;

    for (n, count) in connected_sets_with_origin(d, 8).into_iter().enumerate().skip(1) {
        let cap = (k2 as f64 * n as f64).exp();
        if count as f64 > cap {
            return invalid(format!("animal count {count} at n = {n} exceeds e^(K2 n)"));
        }
        g.animal_counts.push((n, count, cap));
    }
    Ok(g)
}

/// Right-hand side of the tail bound `P(Ψ(ℓ) > |𝒫| c₁ θℓ/Δ) ≤ |𝒫| e^{−c₂(θℓ/Δ − 1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPsi {
    pub threshold: f64,
    pub bound: f64,
    /// `θℓ/Δ ≤ 1`: the bound is at least |𝒫| and says nothing.
    pub vacuous: bool,
}

pub fn tail_psi_rhs(
    classes: usize,
    consts: &GeomConstants,
    theta: f64,
    p: f64,
    ell: f64,
    delta: f64,
) -> Result<TailPsi> {
    let lo = p.powf(1.0 / consts.d as f64);
    if !(theta >= lo && theta <= 1.0) {
        return invalid(format!("theta = {theta} outside [p^(1/d), 1] = [{lo}, 1]"));
    }
    if classes == 0 || !(ell > 0.0) || !(delta > 0.0) {
        return invalid("need |P| >= 1, ell > 0, delta > 0");
    }
    let m = theta * ell / delta;
    let bound = classes as f64 * (-consts.c2 * (m - 1.0)).exp();
    Ok(TailPsi { threshold: classes as f64 * consts.c1 * m, bound, vacuous: m <= 1.0 })
}

/// One scale of a PS sequence, in logs so that large scales do not overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpsLevel {
    pub r: u32,
    pub ln_delta: f64,
    pub ln_p: f64,
    pub classes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpsSum {
    pub ell: f64,
    pub r_hi: u32,
    pub value: f64,
    /// Scales whose Δ_r was too large to sample and were left out of `value`.
    pub skipped: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpsReport {
    pub m_hat: f64,
    pub big_m_hat: f64,
    pub d: usize,
    pub kappa: f64,
    /// `M̂ > m̂ d`.
    pub growth_ok: bool,
    /// `κ < (m̂ d)^{-1}`.
    pub kappa_ok: bool,
    pub sums: Vec<PpsSum>,
    /// Whether the sums are non-increasing along the supplied ℓ values.
    pub decreasing: bool,
    pub holds: bool,
    pub notes: Vec<String>,
}

/// Finite-range proxies for the growth conditions on a PS sequence, plus the truncated sums
/// `ℓ^{-1} Σ_{r=n}^{⌊κ log ℓ⌋} Δ_r^d Ψ̂_r(ℓ)` with sampled lower bounds Ψ̂.
pub fn pps_seq_diagnostic(
    levels: &[PpsLevel],
    d: usize,
    kappa: f64,
    ells: &[f64],
    paths_per_ell: usize,
    seed: u64,
) -> Result<PpsReport> {
    if levels.is_empty() {
        return invalid("empty scale range");
    }
    if levels.iter().any(|l| l.r == 0) {
        return invalid("scales start at r = 1");
    }
    let m_hat = levels.iter().map(|l| l.ln_delta / l.r as f64).fold(f64::NEG_INFINITY, f64::max);
    let big_m_hat = -levels.iter().map(|l| l.ln_p / l.r as f64).fold(f64::NEG_INFINITY, f64::max);
    let growth_ok = big_m_hat > m_hat * d as f64;
    let kappa_ok = kappa > 0.0 && kappa * m_hat * (d as f64) < 1.0;
    let mut notes = Vec::new();
    if !growth_ok {
        notes.push(format!("growth condition fails: M = {big_m_hat:.4} <= m d = {:.4}", m_hat * d as f64));
    }
    if !kappa_ok {
        notes.push(format!("kappa = {kappa} not below 1/(m d) = {:.4}", 1.0 / (m_hat * d as f64)));
    }
    let n = levels[0].r;
    let mut sums = Vec::new();
    for (i, &ell) in ells.iter().enumerate() {
        let r_hi = (kappa * ell.ln()).floor().max(0.0) as u32;
        let mut value = 0.0;
        let mut skipped = Vec::new();
        for l in levels.iter().filter(|l| l.r >= n && l.r <= r_hi) {
            if l.ln_delta > 40.0 {
                skipped.push(l.r);
                continue;
            }
            let field = HashedBernoulli {
                dim: d,
                delta: l.ln_delta.exp(),
                p: l.ln_p.exp().min(1.0),
                seed: derive_seed(seed, l.r as u64),
            };
            let psi = sampled_psi_lower_bound(&field, ell, paths_per_ell, derive_seed(seed, 1000 + i as u64));
            value += (d as f64 * l.ln_delta).exp() * psi as f64;
        }
        sums.push(PpsSum { ell, r_hi, value: value / ell, skipped });
    }
    let decreasing = sums.windows(2).all(|w| w[1].value <= w[0].value + 1e-12);
    if !decreasing {
        notes.push("truncated sums are not decreasing over the supplied lengths".into());
    }
    Ok(PpsReport {
        m_hat,
        big_m_hat,
        d,
        kappa,
        growth_ok,
        kappa_ok,
        holds: growth_ok && kappa_ok,
        sums,
        decreasing,
        notes,
    })
}

/// `ln p_r` for the locally-spoiled field: `p_{r} = 6 C₁ Δ_{r}² e^{−C₂ √ω_{r−1}}` with
/// `C₁ = e^{√e − 1}`, `C₂ = ρ̄₊ √e / 4`.
pub fn spoiled_sequence(n0: u64, exponent: u32, rho_minus: f64, rs: std::ops::RangeInclusive<u32>) -> Result<Vec<PpsLevel>> {
    if n0 < 2 || !(rho_minus > 0.0 && rho_minus < 1.0) {
        return invalid("need N0 >= 2 and rho_minus in (0,1)");
    }
    let e_half = 0.5f64.exp();
    let ln_c1 = e_half - 1.0;
    let c2 = (1.0 - rho_minus) * e_half / 4.0;
    let ln_n0 = (n0 as f64).ln();
    let mut out = Vec::new();
    for r in rs {
        if r == 0 {
            continue;
        }
        let ln_delta = exponent as f64 * r as f64 * ln_n0;
        let omega_prev = ((r - 1) as f64 * ln_n0).exp();
        let ln_p = 6f64.ln() + ln_c1 + 2.0 * ln_delta - c2 * omega_prev.sqrt();
        out.push(PpsLevel { r, ln_delta, ln_p, classes: 33 });
    }
    Ok(out)
}

/// Smallest `r₀` such that the growth condition holds on `[r₀, r_max]` of `levels`.
pub fn growth_onset(levels: &[PpsLevel], d: usize) -> Option<u32> {
    (0..levels.len()).find_map(|i| {
        let tail = &levels[i..];
        let m = tail.iter().map(|l| l.ln_delta / l.r as f64).fold(f64::NEG_INFINITY, f64::max);
        let big_m = -tail.iter().map(|l| l.ln_p / l.r as f64).fold(f64::NEG_INFINITY, f64::max);
        (big_m > m * d as f64).then_some(tail[0].r)
    })
}

/// Per-class open frequency against a domination bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassFrequency {
    pub class: u32,
    pub n: usize,
    pub open: usize,
    pub freq: f64,
    pub se: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Checks `freq ≤ bound + 3 SE` class by class; `SE` uses `max(freq, 1/n)` so an all-closed
/// class still gets a nonzero error bar.
pub fn class_frequency_check(samples: &[(u32, bool)], bound: f64) -> Vec<ClassFrequency> {
    let mut by: std::collections::BTreeMap<u32, (usize, usize)> = Default::default();
    for &(c, open) in samples {
        let e = by.entry(c).or_default();
        e.0 += 1;
        e.1 += usize::from(open);
    }
    by.into_iter()
        .map(|(class, (n, open))| {
            let freq = open as f64 / n as f64;
            let q = freq.max(1.0 / n as f64);
            let se = (q * (1.0 - q) / n as f64).sqrt();
            ClassFrequency { class, n, open, freq, se, bound, ok: freq <= bound + 3.0 * se }
        })
        .collect()
}
