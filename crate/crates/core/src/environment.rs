//! What the walker and the block predicates read: occupancy in space-time.
//!
//! The exclusion process ([`Trajectory`]) is the main implementation; constant and static
//! environments serve as calibration presets. Presets are registered by name and built
//! at runtime from [`EnvParams`].

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graphical::{ArrowField, Configuration, SpaceTimeGrid, Trajectory, Window};
use crate::rng::stream_rng;

pub trait Environment: Send + Sync {
    /// Inclusive range of sites on which occupancy is defined.
    fn site_range(&self) -> (i64, i64);
    fn horizon(&self) -> f64;
    fn occupancy(&self, x: i64, t: f64) -> Result<u8>;
    /// Does the occupancy at `x` change at some time in `(t, t + eps)`?
    fn flips_within(&self, x: i64, t: f64, eps: f64) -> Result<bool>;
    /// Are both clocks adjacent to `x` silent during `(t, t + eps)`?
    fn clocks_silent(&self, x: i64, t: f64, eps: f64) -> Result<bool>;

    /// Occupancy of sites `x0..x1` at integer times `t0..=t1`.
    fn grid(&self, x0: i64, x1: i64, t0: i64, t1: i64) -> Result<SpaceTimeGrid> {
        let mut rows = Vec::with_capacity((t1 - t0 + 1).max(0) as usize);
        for t in t0..=t1 {
            let row = (x0..x1).map(|x| self.occupancy(x, t as f64)).collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(SpaceTimeGrid::from_rows(x0, x1, t0, rows))
    }

    /// The underlying exclusion trajectory, when there is one.
    fn trajectory(&self) -> Option<&Trajectory> {
        None
    }

    fn check(&self, x: i64, t: f64) -> Result<()> {
        let (lo, hi) = self.site_range();
        if x < lo || x > hi {
            return Err(Error::OutOfWindow { site: x, time: t, lo, hi });
        }
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::OutOfHorizon { time: t, horizon: self.horizon() });
        }
        Ok(())
    }
}

impl Environment for Trajectory {
    fn site_range(&self) -> (i64, i64) {
        (self.window().lo(), self.window().hi())
    }

    fn horizon(&self) -> f64 {
        self.window().t_max
    }

    fn occupancy(&self, x: i64, t: f64) -> Result<u8> {
        self.check(x, t)?;
        self.evolve(x, t)
    }

    fn flips_within(&self, x: i64, t: f64, eps: f64) -> Result<bool> {
        self.check(x, t)?;
        self.check(x, t + eps)?;
        let f = self.field();
        let mut adjacent: Vec<(f64, i64)> = Vec::new();
        for e in [x - 1, x] {
            let ts = f.edge(e);
            let i = ts.partition_point(|&v| v <= t);
            adjacent.extend(ts[i..].iter().take_while(|&&v| v < t + eps).map(|&v| (v, e)));
        }
        if adjacent.is_empty() {
            return Ok(false);
        }
        adjacent.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let v0 = self.evolve(x, t)?;
        for (u, _) in adjacent {
            if self.evolve(x, u)? != v0 {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn clocks_silent(&self, x: i64, t: f64, eps: f64) -> Result<bool> {
        self.check(x, t)?;
        self.check(x, t + eps)?;
        let f = self.field();
        Ok(!f.rings_in_open(x - 1, t, t + eps) && !f.rings_in_open(x, t, t + eps))
    }

    fn grid(&self, x0: i64, x1: i64, t0: i64, t1: i64) -> Result<SpaceTimeGrid> {
        Trajectory::grid(self, x0, x1, t0, t1)
    }

    fn trajectory(&self) -> Option<&Trajectory> {
        Some(self)
    }
}

/// ξ ≡ value, with no clocks at all.
#[derive(Debug, Clone)]
pub struct ConstantEnvironment {
    pub value: u8,
    pub lo: i64,
    pub hi: i64,
    pub t_max: f64,
}

impl ConstantEnvironment {
    pub fn new(value: u8, lo: i64, hi: i64, t_max: f64) -> Result<Self> {
        if value > 1 || lo > hi || !(t_max > 0.0) {
            return invalid("constant environment needs value in {0,1}, lo <= hi, t_max > 0");
        }
        Ok(Self { value, lo, hi, t_max })
    }
}

impl Environment for ConstantEnvironment {
    fn site_range(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }
    fn horizon(&self) -> f64 {
        self.t_max
    }
    fn occupancy(&self, x: i64, t: f64) -> Result<u8> {
        self.check(x, t)?;
        Ok(self.value)
    }
    fn flips_within(&self, x: i64, t: f64, eps: f64) -> Result<bool> {
        self.check(x, t + eps)?;
        Ok(false)
    }
    fn clocks_silent(&self, x: i64, t: f64, eps: f64) -> Result<bool> {
        self.check(x, t + eps)?;
        Ok(true)
    }
}

/// Time-independent environment: ℤ cut into intervals, each coloured by a fair coin.
#[derive(Debug, Clone)]
pub struct StaticEnvironment {
    /// Left ends of the intervals, increasing; interval i is `[starts[i], starts[i+1])`.
    starts: Vec<i64>,
    colors: Vec<u8>,
    t_max: f64,
}

impl StaticEnvironment {
    /// Intervals laid out from 0 in both directions (a renewal sequence each way) until
    /// `[lo, hi]` is covered. Lengths are `⌈U^{-1/index}⌉`, i.e. `P(L ≥ n) = n^{-index}`
    /// for integer `n`; index 1.5 gives finite mean and infinite variance.
    pub fn pareto(index: f64, lo: i64, hi: i64, t_max: f64, seed: u64) -> Result<Self> {
        if !(index > 1.0) {
            return invalid(format!("Pareto index must exceed 1 for a finite mean, got {index}"));
        }
        if lo > 0 || hi < 0 {
            return invalid("static environment range must contain the origin");
        }
        let mut rng = stream_rng(seed, 0);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> i64 {
            let u: f64 = 1.0 - rng.random::<f64>();
            u.powf(-1.0 / index).ceil().min(1e15) as i64
        };
        let mut right = vec![0i64];
        while *right.last().unwrap() <= hi {
            let l = draw(&mut rng);
            right.push(right.last().unwrap() + l);
        }
        right.pop();
        let mut left = Vec::new();
        let mut cur = 0i64;
        while cur > lo {
            cur -= draw(&mut rng);
            left.push(cur);
        }
        left.reverse();
        let starts: Vec<i64> = left.into_iter().chain(right).collect();
        let colors = starts.iter().map(|_| u8::from(rng.random::<bool>())).collect();
        Ok(Self { starts, colors, t_max })
    }

    pub fn from_intervals(starts: Vec<i64>, colors: Vec<u8>, t_max: f64) -> Result<Self> {
        if starts.len() != colors.len() || starts.is_empty() || starts.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("interval starts must be increasing and match the colours");
        }
        Ok(Self { starts, colors, t_max })
    }

    pub fn intervals(&self) -> impl Iterator<Item = (i64, u8)> + '_ {
        self.starts.iter().copied().zip(self.colors.iter().copied())
    }
}

impl Environment for StaticEnvironment {
    fn site_range(&self) -> (i64, i64) {
        (self.starts[0], i64::MAX / 4)
    }
    fn horizon(&self) -> f64 {
        self.t_max
    }
    fn occupancy(&self, x: i64, t: f64) -> Result<u8> {
        self.check(x, t)?;
        let i = self.starts.partition_point(|&s| s <= x) - 1;
        Ok(self.colors[i])
    }
    fn flips_within(&self, x: i64, t: f64, eps: f64) -> Result<bool> {
        self.check(x, t + eps)?;
        Ok(false)
    }
    fn clocks_silent(&self, x: i64, t: f64, eps: f64) -> Result<bool> {
        self.check(x, t + eps)?;
        Ok(true)
    }
}

/// Inputs a preset may use.
#[derive(Debug, Clone)]
pub struct EnvParams {
    pub window: Window,
    pub rho: f64,
    pub arrows_seed: u64,
    pub config_seed: u64,
    pub pareto_index: f64,
}

pub trait EnvironmentPreset: Sync {
    fn name(&self) -> &'static str;
    fn build(&self, p: &EnvParams) -> Result<Box<dyn Environment>>;
}

struct Bernoulli;
struct AllOnes;
struct AllZeros;
struct StaticIntervals;

impl EnvironmentPreset for Bernoulli {
    fn name(&self) -> &'static str {
        "bernoulli"
    }
    fn build(&self, p: &EnvParams) -> Result<Box<dyn Environment>> {
        let field = ArrowField::sample(&p.window, p.arrows_seed)?;
        let config = Configuration::sample(p.rho, &p.window, p.config_seed)?;
        Ok(Box::new(Trajectory::new(field, config)?))
    }
}

impl EnvironmentPreset for AllOnes {
    fn name(&self) -> &'static str {
        "all-ones"
    }
    fn build(&self, p: &EnvParams) -> Result<Box<dyn Environment>> {
        let field = ArrowField::sample(&p.window, p.arrows_seed)?;
        Ok(Box::new(Trajectory::new(field, Configuration::all_ones(&p.window))?))
    }
}

impl EnvironmentPreset for AllZeros {
    fn name(&self) -> &'static str {
        "all-zeros"
    }
    fn build(&self, p: &EnvParams) -> Result<Box<dyn Environment>> {
        let field = ArrowField::sample(&p.window, p.arrows_seed)?;
        Ok(Box::new(Trajectory::new(field, Configuration::all_zeros(&p.window))?))
    }
}

impl EnvironmentPreset for StaticIntervals {
    fn name(&self) -> &'static str {
        "static-intervals"
    }
    fn build(&self, p: &EnvParams) -> Result<Box<dyn Environment>> {
        let w = &p.window;
        Ok(Box::new(StaticEnvironment::pareto(p.pareto_index, w.lo(), w.hi(), w.t_max, p.config_seed)?))
    }
}

static PRESETS: [&dyn EnvironmentPreset; 4] = [&Bernoulli, &AllOnes, &AllZeros, &StaticIntervals];

pub fn presets() -> &'static [&'static dyn EnvironmentPreset] {
    &PRESETS
}

pub fn preset(name: &str) -> Result<&'static dyn EnvironmentPreset> {
    PRESETS.iter().copied().find(|p| p.name() == name).ok_or_else(|| {
        let known: Vec<_> = PRESETS.iter().map(|p| p.name()).collect();
        Error::InvalidArgument(format!("unknown environment preset '{name}' (known: {})", known.join(", ")))
    })
}
