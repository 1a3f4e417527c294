//! Named experiments. Each replica is a pure function of (config, replica index); results are
//! gathered in replica order, so output bytes do not depend on the thread count.

use rayon::prelude::*;

use super::calibration::{round_down, Calibration};
use super::config::ExperimentConfig;
use super::report::SummaryReport;
use super::stats::{Proportion, Stat, Z95, Z99};
use crate::environment::{preset, EnvParams, Environment, StaticEnvironment};
use crate::error::{Error, Result};
use crate::graphical::Window;
use crate::rng::{derive_seed, derive_seed_str, ReplicaSeeds};
use crate::scales::{geometry, theta_star, BlockAnalyzer, BlockId, BlockKind};
use crate::walker::{simulate_walk_with_seeds, RateSet, WalkPath};

pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn default_config(&self) -> ExperimentConfig;
    fn run(&self, cfg: &ExperimentConfig) -> Result<SummaryReport>;
}

/// Runs `f(i)` for `i in 0..n` on the current rayon pool; results in index order.
pub fn run_replicas<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

struct Speed;
struct SmoothJump;
struct Decay;
struct StaticEnv;
struct Pilot;

static EXPERIMENTS: [&dyn Experiment; 5] = [&Speed, &SmoothJump, &Decay, &StaticEnv, &Pilot];

pub fn experiments() -> &'static [&'static dyn Experiment] {
    &EXPERIMENTS
}

pub fn experiment(name: &str) -> Result<&'static dyn Experiment> {
    EXPERIMENTS.iter().copied().find(|e| e.name() == name).ok_or_else(|| {
        let known: Vec<_> = EXPERIMENTS.iter().map(|e| e.name()).collect();
        Error::InvalidArgument(format!("unknown experiment '{name}' (known: {})", known.join(", ")))
    })
}

/// Walk of one replica in a preset environment. A walk that leaves the simulated window is
/// re-run on a window twice as wide (same seeds) and the retry is logged.
fn walk_replica(cfg: &ExperimentConfig, rates: &RateSet, i: usize, extra_time: f64, notes: &mut Vec<String>) -> Result<(Box<dyn Environment>, WalkPath)> {
    let seeds = ReplicaSeeds::new(cfg.seed, i as u64);
    let g = rates.gamma() * cfg.horizon;
    let mut half = (g + 8.0 * g.sqrt() + 20.0).ceil() as i64;
    loop {
        let window = Window::new(-half, half, cfg.horizon + extra_time)?;
        let params = EnvParams {
            window,
            rho: cfg.rho,
            arrows_seed: seeds.arrows,
            config_seed: seeds.config,
            pareto_index: cfg.pareto_index,
        };
        let env = preset(&cfg.environment)?.build(&params)?;
        match simulate_walk_with_seeds(env.as_ref(), rates, cfg.horizon, seeds.clock, seeds.marks) {
            Ok(w) => return Ok((env, w)),
            Err(Error::OutOfWindow { .. }) if half < 1 << 40 => {
                notes.push(format!("replica {i}: walk left [-{half}, {half}], re-run on a wider window"));
                half *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

fn run_speed(cfg: &ExperimentConfig, name: &str) -> Result<SummaryReport> {
    cfg.validate()?;
    let rates = cfg.rates()?;
    let rows = run_replicas(cfg.replicas, |i| {
        let mut notes = Vec::new();
        let (_, walk) = walk_replica(cfg, &rates, i, 0.0, &mut notes)?;
        let f = walk.speed_functionals();
        let (lo, up) = walk.sandwich_walks();
        let (n1, n0) = walk.jump_counts(cfg.horizon);
        let exact = walk.verify_representation() && n1 + n0 == walk.clock_count(cfg.horizon);
        let row = vec![
            i as f64,
            f.speed,
            f.particle_jump_fraction,
            f.hole_jump_fraction,
            lo.final_position() as f64 / cfg.horizon,
            up.final_position() as f64 / cfg.horizon,
            walk.sandwich_violations() as f64,
            f64::from(u8::from(exact)),
        ];
        Ok((row, notes))
    })?;
    let mut rep = SummaryReport::new(
        name,
        cfg,
        &["replica", "speed", "particle_fraction", "hole_fraction", "lower_speed", "upper_speed", "sandwich_violations", "representation_ok"],
    );
    for (row, notes) in rows {
        rep.rows.push(row);
        rep.notes.extend(notes);
    }
    let speed = rep.aggregate("speed");
    let pf = rep.aggregate("particle_fraction");
    let hf = rep.aggregate("hole_fraction");
    let lo = rep.aggregate("lower_speed");
    let up = rep.aggregate("upper_speed");
    rep.values.insert("v0".into(), rates.v(0));
    rep.values.insert("v1".into(), rates.v(1));
    let bad_rep = rep.column("representation_ok").iter().filter(|&&v| v != 1.0).count();
    rep.assert("representation", bad_rep == 0, format!("{bad_rep} replicas violate the jump representation or N1+N0=N"));
    let viol: f64 = rep.column("sandwich_violations").iter().sum();
    rep.assert("pathwise_sandwich", viol == 0.0, format!("{viol} sandwich violations"));
    rep.assert(
        "aggregate_sandwich",
        lo.mean <= speed.mean && speed.mean <= up.mean,
        format!("{:.6} <= {:.6} <= {:.6}", lo.mean, speed.mean, up.mean),
    );
    match cfg.environment.as_str() {
        "all-ones" | "all-zeros" => {
            let v = rates.v(u8::from(cfg.environment == "all-ones"));
            rep.assert(
                "homogeneous_speed",
                speed.within(v, 3.0),
                format!("mean {:.6} vs v = {v} (3 SE = {:.6})", speed.mean, 3.0 * speed.se),
            );
        }
        _ => {}
    }
    let cal = Calibration::desk()?;
    if cal.matches_speed(cfg) {
        rep.values.insert("floor_particle".into(), cal.floor_particle);
        rep.values.insert("floor_hole".into(), cal.floor_hole);
        rep.assert(
            "particle_fraction_floor",
            pf.mean >= cal.floor_particle,
            format!("mean N1/(gamma T) = {:.6} vs floor {}", pf.mean, cal.floor_particle),
        );
        rep.assert(
            "hole_fraction_floor",
            hf.mean >= cal.floor_hole,
            format!("mean N0/(gamma T) = {:.6} vs floor {}", hf.mean, cal.floor_hole),
        );
        // v = v1·N1/N + v0·N0/N on average, so the floors bound the speed away from v0 and v1
        let (v0, v1) = (rates.v(0), rates.v(1));
        rep.values.insert("speed_margin_low".into(), (v1 - v0) * cal.floor_particle);
        rep.values.insert("speed_margin_high".into(), (v1 - v0) * cal.floor_hole);
    } else {
        rep.notes.push("calibrated floors apply only to the default physics; not asserted".into());
    }
    Ok(rep)
}

impl Experiment for Speed {
    fn name(&self) -> &'static str {
        "speed"
    }
    fn describe(&self) -> &'static str {
        "W_T/T and the particle/hole jump fractions over independent replicas"
    }
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig { experiment: "speed".into(), ..Default::default() }
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<SummaryReport> {
        run_speed(cfg, self.name())
    }
}

impl Experiment for SmoothJump {
    fn name(&self) -> &'static str {
        "smooth-jump"
    }
    fn describe(&self) -> &'static str {
        "frequency of a particle jump in (s, s+1] given a smooth r*-block at (W_s, s); Θ* diagnostic"
    }
    fn default_config(&self) -> ExperimentConfig {
        // at ρ = 0.5 a desk-scale block is essentially never dense, so the conditioning is vacuous
        ExperimentConfig { experiment: "smooth-jump".into(), rho: 0.99, horizon: 200.0, replicas: 40, ..Default::default() }
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<SummaryReport> {
        cfg.validate()?;
        let rates = cfg.rates()?;
        let sched = cfg.schedule(cfg.r_star.max(1))?;
        let d = sched.delta(cfg.r_star)?;
        let rows = run_replicas(cfg.replicas, |i| {
            let mut notes = Vec::new();
            let (env, walk) = walk_replica(cfg, &rates, i, 2.0 * d as f64 + 1.0, &mut notes)?;
            let steps = cfg.horizon.floor() as i64;
            let pos: Vec<i64> = (0..=steps).map(|s| walk.position(s as f64)).collect();
            let (mn, mx) = (*pos.iter().min().unwrap(), *pos.iter().max().unwrap());
            let x0 = mn.div_euclid(d) * d;
            let x1 = (mx.div_euclid(d) + 1) * d;
            let t1 = (steps.div_euclid(d) + 1) * d - 1;
            let a = BlockAnalyzer::new(env.as_ref(), &sched, x0, x1, 0, t1)?;
            let y = walk.y_indicators();
            let (mut smooth, mut hits) = (0usize, 0usize);
            for s in 0..steps {
                let id = BlockId::containing(cfg.r_star, pos[s as usize], s as f64, &sched)?;
                if !a.is_rough(id)? {
                    smooth += 1;
                    hits += usize::from(y[s as usize]);
                }
            }
            let th = theta_star(&a, &walk, cfg.r_star, cfg.horizon)?;
            // path length ℓ_T = T + N_T and the rough-block count inequality at ℓ_T
            let ell = cfg.horizon + walk.clock_count(cfg.horizon) as f64;
            let lhs = (d * d) as f64 * (th.phi_rarefied + th.phi_turbulent) as f64;
            let rhs = ell / (2.0 * (1.0 + rates.gamma()));
            let smooth_frac = (cfg.horizon.floor() - th.theta as f64) / cfg.horizon;
            let row = vec![
                i as f64,
                smooth as f64,
                hits as f64,
                th.theta as f64,
                th.bound as f64,
                f64::from(u8::from(th.ok)),
                ell,
                lhs,
                rhs,
                smooth_frac,
            ];
            Ok((row, notes))
        })?;
        let mut rep = SummaryReport::new(
            self.name(),
            cfg,
            &[
                "replica",
                "smooth_times",
                "smooth_jumps",
                "theta",
                "theta_bound",
                "theta_ok",
                "path_length",
                "rough_count_lhs",
                "rough_count_rhs",
                "smooth_fraction",
            ],
        );
        for (row, notes) in rows {
            rep.rows.push(row);
            rep.notes.extend(notes);
        }
        let n: f64 = rep.column("smooth_times").iter().sum();
        let k: f64 = rep.column("smooth_jumps").iter().sum();
        let prop = Proportion::new(k as usize, n as usize, Z99);
        rep.values.insert("delta_hat".into(), prop.p_hat);
        rep.values.insert("delta_hat_wilson99_lower".into(), prop.lower);
        rep.values.insert("delta_hat_wilson99_upper".into(), prop.upper);
        rep.values.insert("smooth_times".into(), n);
        rep.values.insert("one_minus_exp_minus_gamma".into(), 1.0 - (-rates.gamma()).exp());
        rep.aggregate("theta");
        if n < 30.0 {
            rep.notes.push(format!("only {n} smooth times: estimate inconclusive"));
        } else {
            rep.assert("delta_hat_positive", prop.lower > 0.0, format!("99% Wilson lower bound {:.6}", prop.lower));
        }
        let bad = rep.column("theta_ok").iter().filter(|&&v| v != 1.0).count();
        rep.assert("theta_star_bound", bad == 0, format!("{bad} replicas with Θ* above Δ(Φ^r + Φ^t)"));
        // finite-T analogues of the two factors of the jump-fraction lower bound, reported
        // separately; their product is not asserted
        let sf = rep.aggregate("smooth_fraction");
        rep.values.insert("smooth_fraction_mean".into(), sf.mean);
        let eligible: Vec<usize> =
            (0..rep.rows.len()).filter(|&k| rep.column("path_length")[k] >= cfg.ell_star).collect();
        let (lhs, rhs) = (rep.column("rough_count_lhs"), rep.column("rough_count_rhs"));
        let holds = eligible.iter().filter(|&&k| lhs[k] <= rhs[k]).count();
        rep.values.insert("rough_count_eligible".into(), eligible.len() as f64);
        rep.values.insert("rough_count_holds".into(), holds as f64);
        rep.notes.push(format!(
            "Δ²(Φ^r + Φ^t) ≤ ℓ/(2(1+γ)) at ℓ = T + N_T ≥ ℓ* = {}: holds in {holds} of {} replicas (diagnostic)",
            cfg.ell_star,
            eligible.len()
        ));
        rep.notes.push("Wilson interval pools all smooth times across replicas".into());
        Ok(rep)
    }
}

#[derive(Debug, Clone, Copy)]
struct LevelEstimate {
    level: u32,
    kind: u8,
    prop: Proportion,
}

/// Not-stuck frequency of B_r(0,0) over independent arrow fields.
fn not_stuck(cfg: &ExperimentConfig, r: u32, n: usize) -> Result<Proportion> {
    let sched = cfg.schedule(r)?;
    let d = sched.delta(r)?;
    let master = derive_seed_str(cfg.seed, "not-stuck");
    let win = Window::closed(-1, d + 1, d as f64 + 1.0)?;
    let flags = run_replicas(n, |i| {
        let s = derive_seed(master, (r as u64) << 32 | i as u64);
        let p = EnvParams { window: win, rho: cfg.rho, arrows_seed: s, config_seed: s, pareto_index: cfg.pareto_index };
        let env = preset("all-zeros")?.build(&p)?;
        let a = BlockAnalyzer::new(env.as_ref(), &sched, 0, d, 0, d - 1)?;
        Ok(!a.is_stuck(BlockId::new(r, 0, 0, &sched)?)?)
    })?;
    Ok(Proportion::new(flags.iter().filter(|&&v| v).count(), n, Z95))
}

/// Bad frequency of B_r(0, 2Δ_r) under the decay schedule.
fn bad_rate(cfg: &ExperimentConfig, r: u32, n: usize) -> Result<Proportion> {
    let sched = cfg.decay_schedule(r)?;
    let d = sched.delta(r)?;
    let master = derive_seed_str(cfg.seed, "bad");
    let flags = run_replicas(n, |i| {
        let s = derive_seed(master, (r as u64) << 32 | i as u64);
        let win = Window::new(-5 * d, 6 * d - 1, 3.0 * d as f64)?;
        let p = EnvParams { window: win, rho: cfg.decay_rho, arrows_seed: derive_seed(s, 1), config_seed: derive_seed(s, 2), pareto_index: cfg.pareto_index };
        let env = preset(&cfg.environment)?.build(&p)?;
        let a = BlockAnalyzer::new(env.as_ref(), &sched, -5 * d, 6 * d, 0, 3 * d - 1)?;
        a.is_bad(BlockId::new(r, 0, 2 * d, &sched)?)
    })?;
    Ok(Proportion::new(flags.iter().filter(|&&v| v).count(), n, Z95))
}

/// Locally-spoiled frequency of B_R(0, 2Δ_R) among realizations with a dense base. The
/// verdict depends only on ξ at the base time and the arrows inside 𝐕 (see
/// `restrict_to_superblock`), so a closed system on 𝐕 started from the stationary law is
/// exact.
fn ls_rate(cfg: &ExperimentConfig, level: u32, n: usize) -> Result<Proportion> {
    let sched = cfg.decay_schedule(level)?;
    let d = sched.delta(level)?;
    let master = derive_seed_str(cfg.seed, "locally-spoiled");
    let flags = run_replicas(n, |i| {
        let s = derive_seed(master, (level as u64) << 32 | i as u64);
        let win = Window::closed(-5 * d, 6 * d - 1, 3.0 * d as f64)?;
        let p = EnvParams { window: win, rho: cfg.decay_rho, arrows_seed: derive_seed(s, 1), config_seed: derive_seed(s, 2), pareto_index: cfg.pareto_index };
        let env = preset(&cfg.environment)?.build(&p)?;
        let a = BlockAnalyzer::new(env.as_ref(), &sched, -5 * d, 6 * d, 0, 0)?;
        let id = BlockId::new(level, 0, 2 * d, &sched)?;
        let dense = !a.is_rarefied(&geometry(id, BlockKind::Base, &sched)?, level)?;
        Ok((dense, dense && a.is_locally_spoiled(id)?))
    })?;
    let dense = flags.iter().filter(|f| f.0).count();
    Ok(Proportion::new(flags.iter().filter(|f| f.1).count(), dense, Z95))
}

fn decay_estimates(cfg: &ExperimentConfig) -> Result<Vec<LevelEstimate>> {
    let mut out = Vec::new();
    for r in [1, 2] {
        out.push(LevelEstimate { level: r, kind: 0, prop: not_stuck(cfg, r, cfg.stuck_replicas)? });
    }
    for r in [1, 2] {
        out.push(LevelEstimate { level: r, kind: 1, prop: bad_rate(cfg, r, cfg.replicas)? });
    }
    for r in [2, 3] {
        out.push(LevelEstimate { level: r, kind: 2, prop: ls_rate(cfg, r, cfg.ls_replicas)? });
    }
    Ok(out)
}

const KINDS: [&str; 3] = ["not_stuck", "bad", "locally_spoiled_given_dense_base"];

/// Conservative ratio of two frequencies: Wilson lower of the first over Wilson upper of the
/// second.
fn ratio_lower(a: &Proportion, b: &Proportion) -> f64 {
    if b.upper > 0.0 {
        a.lower / b.upper
    } else {
        f64::INFINITY
    }
}

impl Experiment for Decay {
    fn name(&self) -> &'static str {
        "decay"
    }
    fn describe(&self) -> &'static str {
        "P(not stuck), P(bad), P(locally spoiled | dense base) across scales"
    }
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig { experiment: "decay".into(), replicas: 400, ..Default::default() }
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<SummaryReport> {
        cfg.validate()?;
        let est = decay_estimates(cfg)?;
        let mut rep = SummaryReport::new(self.name(), cfg, &["level", "kind", "events", "trials", "p_hat", "se", "wilson95_lower", "wilson95_upper"]);
        rep.notes.push(format!("kind codes: 0 = {}, 1 = {}, 2 = {}", KINDS[0], KINDS[1], KINDS[2]));
        rep.notes.push(format!(
            "not stuck uses the (N0={}, E={}) schedule; bad and locally spoiled use (N0={}, E={}, rho_minus={}) at density {}",
            cfg.n0, cfg.exponent, cfg.decay_n0, cfg.decay_exponent, cfg.decay_rho_minus, cfg.decay_rho
        ));
        for e in &est {
            let p = &e.prop;
            rep.rows.push(vec![e.level as f64, e.kind as f64, p.k as f64, p.n as f64, p.p_hat, p.se, p.lower, p.upper]);
            rep.values.insert(format!("{}_r{}", KINDS[e.kind as usize], e.level), p.p_hat);
        }
        let get = |kind: u8, level: u32| est.iter().find(|e| e.kind == kind && e.level == level).map(|e| e.prop).expect("estimated");
        let (ns1, ns2) = (get(0, 1), get(0, 2));
        let d1 = cfg.schedule(1)?.delta(1)? as f64;
        let bound = 2.0 * d1 * d1 * (-d1).exp();
        rep.values.insert("not_stuck_bound_r1".into(), bound);
        rep.assert(
            "not_stuck_r1_bound",
            ns1.p_hat <= bound + 3.0 * ns1.se,
            format!("{:.6} <= 2 Δ1² e^(-Δ1) + 3 SE = {:.6} + {:.6}", ns1.p_hat, bound, 3.0 * ns1.se),
        );
        rep.assert("not_stuck_decreases", ns2.p_hat < ns1.p_hat, format!("{:.6} < {:.6}", ns2.p_hat, ns1.p_hat));
        let cal = Calibration::desk()?;
        let (b1, b2) = (get(1, 1), get(1, 2));
        rep.values.insert("bad_factor".into(), cal.bad_factor);
        rep.values.insert("bad_ratio_lower".into(), ratio_lower(&b1, &b2));
        rep.assert(
            "bad_decreases_by_factor",
            b2.p_hat < b1.p_hat && b1.p_hat >= cal.bad_factor * b2.p_hat,
            format!("P(bad): r=1 {:.6}, r=2 {:.6}, factor {}", b1.p_hat, b2.p_hat, cal.bad_factor),
        );
        let (l2, l3) = (get(2, 2), get(2, 3));
        rep.values.insert("ls_factor".into(), cal.ls_factor);
        rep.values.insert("ls_ratio_lower".into(), ratio_lower(&l2, &l3));
        if l2.n == 0 || l3.n == 0 {
            rep.notes.push("no realization with a dense base at some level: locally spoiled decay inconclusive".into());
        }
        rep.assert(
            "locally_spoiled_decreases_by_factor",
            l2.n > 0 && l3.n > 0 && l3.p_hat < l2.p_hat && l2.p_hat >= cal.ls_factor * l3.p_hat,
            format!("P(ls | dense): level 2 {:.6}, level 3 {:.6}, factor {}", l2.p_hat, l3.p_hat, cal.ls_factor),
        );
        Ok(rep)
    }
}

/// Static demo rates: β₀ = α₀ = 1/2, β₁ small, α₁ = 1 − β₁.
pub const STATIC_BETA1: f64 = 1e-3;

impl Experiment for StaticEnv {
    fn name(&self) -> &'static str {
        "static-env"
    }
    fn describe(&self) -> &'static str {
        "walk in a static coloured-interval environment: heavy-tailed lengths slow it to speed 0"
    }
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig { experiment: "static-env".into(), replicas: 20, ..Default::default() }
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<SummaryReport> {
        cfg.validate()?;
        let rates = RateSet::new(0.5, 0.5, 1.0 - STATIC_BETA1, STATIC_BETA1)?;
        let mut rep = SummaryReport::new(self.name(), cfg, &["index", "horizon", "replica", "speed"]);
        rep.notes.push(format!("rates: alpha0 = beta0 = 0.5, alpha1 = {}, beta1 = {STATIC_BETA1}", 1.0 - STATIC_BETA1));
        let mut means = Vec::new();
        for (c, &index) in [cfg.pareto_index, cfg.control_index].iter().enumerate() {
            for (h, &t) in cfg.horizons.iter().enumerate() {
                let label = derive_seed_str(cfg.seed, &format!("static/{c}/{h}"));
                let rows = run_replicas(cfg.replicas, |i| {
                    let seeds = ReplicaSeeds::new(label, i as u64);
                    let mut reach = (10.0 * t.sqrt()) as i64 + 1000;
                    loop {
                        let env = StaticEnvironment::pareto(index, -reach, t as i64 + 10, t, seeds.config)?;
                        match simulate_walk_with_seeds(&env, &rates, t, seeds.clock, seeds.marks) {
                            Ok(w) => return Ok(vec![index, t, i as f64, w.final_position() as f64 / t]),
                            Err(Error::OutOfWindow { .. }) if reach < 1 << 40 => reach *= 4,
                            Err(e) => return Err(e),
                        }
                    }
                })?;
                let s = Stat::of(&rows.iter().map(|r| r[3]).collect::<Vec<_>>());
                rep.aggregates.insert(format!("speed_index{index}_T{t}"), s);
                means.push((c, t, s));
                rep.rows.extend(rows);
            }
        }
        let heavy: Vec<&Stat> = means.iter().filter(|m| m.0 == 0).map(|m| &m.2).collect();
        let control: Vec<&Stat> = means.iter().filter(|m| m.0 == 1).map(|m| &m.2).collect();
        let decreasing = heavy.windows(2).all(|w| w[1].mean < w[0].mean);
        rep.assert(
            "heavy_tail_speed_decreases",
            decreasing,
            format!("means over T: {:?}", heavy.iter().map(|s| s.mean).collect::<Vec<_>>()),
        );
        if let (Some(c), Some(hv)) = (control.last(), heavy.last()) {
            rep.assert(
                "control_speed_positive",
                c.mean - 3.0 * c.se > 0.0 && c.mean > hv.mean,
                format!("control {:.6} ± {:.6}, heavy tail {:.6}", c.mean, c.se, hv.mean),
            );
        }
        Ok(rep)
    }
}

impl Experiment for Pilot {
    fn name(&self) -> &'static str {
        "pilot"
    }
    fn describe(&self) -> &'static str {
        "larger independent run that fixes the acceptance floors and decay factors"
    }
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig { experiment: "pilot".into(), seed: 2024, replicas: 300, stuck_replicas: 4000, ls_replicas: 60, ..Default::default() }
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<SummaryReport> {
        let (cal, rep) = pilot(cfg)?;
        let mut rep = rep;
        rep.notes.push(cal.to_json());
        Ok(rep)
    }
}

/// Certification runs use this many speed replicas.
pub const TARGET_SPEED_REPLICAS: usize = 100;

/// Pilot protocol. Speed floors: pilot mean minus four standard errors of a
/// `TARGET_SPEED_REPLICAS`-replica mean, rounded down. Decay factors: the conservative pilot
/// ratio, floored and capped at 10, and at least 1 (strict decrease only).
pub fn pilot(cfg: &ExperimentConfig) -> Result<(Calibration, SummaryReport)> {
    let speed_cfg = ExperimentConfig { environment: "bernoulli".into(), ..cfg.clone() };
    let sp = run_speed_uncalibrated(&speed_cfg)?;
    let pf = Stat::of(&sp.column("particle_fraction"));
    let hf = Stat::of(&sp.column("hole_fraction"));
    let scale = (pf.n as f64 / TARGET_SPEED_REPLICAS as f64).sqrt();
    let est = decay_estimates(&ExperimentConfig { replicas: cfg.replicas.max(400), ..cfg.clone() })?;
    let get = |kind: u8, level: u32| est.iter().find(|e| e.kind == kind && e.level == level).map(|e| e.prop).expect("estimated");
    let bad_ratio = ratio_lower(&get(1, 1), &get(1, 2));
    let ls_ratio = ratio_lower(&get(2, 2), &get(2, 3));
    let factor = |r: f64| r.floor().clamp(1.0, 10.0);
    let cal = Calibration {
        schema_version: 1,
        command: format!("ssepwalk experiment pilot --seed {} --replicas {}", cfg.seed, cfg.replicas),
        pilot_seed: cfg.seed,
        rho: cfg.rho,
        alpha0: cfg.alpha0,
        beta0: cfg.beta0,
        alpha1: cfg.alpha1,
        beta1: cfg.beta1,
        speed_horizon: cfg.horizon,
        speed_replicas: pf.n,
        target_replicas: TARGET_SPEED_REPLICAS,
        particle_fraction_mean: pf.mean,
        particle_fraction_se: pf.se,
        hole_fraction_mean: hf.mean,
        hole_fraction_se: hf.se,
        floor_particle: round_down(pf.mean - 4.0 * pf.se * scale),
        floor_hole: round_down(hf.mean - 4.0 * hf.se * scale),
        decay_replicas: cfg.replicas.max(400),
        bad_ratio_lower: bad_ratio,
        bad_factor: factor(bad_ratio),
        ls_ratio_lower: ls_ratio,
        ls_factor: factor(ls_ratio),
    };
    let mut rep = SummaryReport::new("pilot", cfg, &["level", "kind", "events", "trials", "p_hat", "se", "wilson95_lower", "wilson95_upper"]);
    for e in &est {
        let p = &e.prop;
        rep.rows.push(vec![e.level as f64, e.kind as f64, p.k as f64, p.n as f64, p.p_hat, p.se, p.lower, p.upper]);
    }
    rep.aggregates.insert("particle_fraction".into(), pf);
    rep.aggregates.insert("hole_fraction".into(), hf);
    rep.aggregates.insert("speed".into(), Stat::of(&sp.column("speed")));
    rep.values.insert("floor_particle".into(), cal.floor_particle);
    rep.values.insert("floor_hole".into(), cal.floor_hole);
    rep.values.insert("bad_factor".into(), cal.bad_factor);
    rep.values.insert("ls_factor".into(), cal.ls_factor);
    Ok((cal, rep))
}

fn run_speed_uncalibrated(cfg: &ExperimentConfig) -> Result<SummaryReport> {
    // the floors are what is being calibrated; drop any comparison with the stored file
    let mut rep = run_speed(cfg, "pilot-speed")?;
    rep.assertions.retain(|a| !a.name.ends_with("_floor"));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        assert_eq!(experiments().len(), 5);
        assert!(experiment("speed").is_ok());
        assert!(matches!(experiment("nope"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn small_speed_run_is_deterministic() {
        let cfg = ExperimentConfig { horizon: 50.0, replicas: 4, ..Default::default() };
        let a = experiment("speed").unwrap().run(&cfg).unwrap();
        let b = experiment("speed").unwrap().run(&cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.assertions.iter().filter(|x| !x.name.ends_with("_floor")).all(|x| x.passed), "{:?}", a.assertions);
    }

    #[test]
    fn all_ones_smooth_jumps() {
        let cfg = ExperimentConfig { environment: "all-ones".into(), horizon: 60.0, replicas: 6, ..Default::default() };
        let rep = experiment("smooth-jump").unwrap().run(&cfg).unwrap();
        let p = rep.values["delta_hat"];
        let n = rep.values["smooth_times"];
        assert_eq!(n, 6.0 * 60.0);
        let target = 1.0 - (-1.0f64).exp();
        assert!((p - target).abs() < 4.0 * (target * (1.0 - target) / n).sqrt(), "{p}");
    }
}
