//! `ssepwalk` command line. Exit codes: 0 success, 1 assertion failure or runtime error,
//! 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ssepwalk::environment::{preset, EnvParams};
use ssepwalk::graphical::export::{arrows_csv, grid_csv, spacetime_svg};
use ssepwalk::graphical::{ArrowField, Configuration, Trajectory, Window};
use ssepwalk::harness::{experiment, experiments, ExperimentConfig};
use ssepwalk::isrw::{boundary_probability, domination_check, srw_facts_check, srw_kernel, DEFAULT_TOL};
use ssepwalk::percolation::{psi_sup_oracle, PercSystem};
use ssepwalk::rng::ReplicaSeeds;
use ssepwalk::scales::{blocks_in, verdicts_csv, verdicts_svg, BlockAnalyzer};
use ssepwalk::walker::simulate_walk_with_seeds;
use ssepwalk::Error;

#[derive(Parser)]
#[command(name = "ssepwalk", version, about = "Random walk driven by the symmetric exclusion process")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat JSON config; keys not given keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the exclusion process and export arrows, initial state and occupancy grid.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[arg(long, default_value_t = -20)]
        lo: i64,
        #[arg(long, default_value_t = 20)]
        hi: i64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
    },
    /// One walk in the configured environment preset.
    Walk,
    /// Block verdicts at scale r over a rectangle of block corners.
    Blocks {
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long, default_value_t = 4)]
        nx: i64,
        #[arg(long, default_value_t = 2)]
        nt: i64,
    },
    /// Sample a Bernoulli block field and compute the exact sup of ψ.
    Perc {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        size: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 1.5)]
        ell: f64,
    },
    /// Independent-walker checks.
    Isrw {
        #[arg(value_enum)]
        check: IsrwCheck,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Run a named experiment (see `experiment list`).
    Experiment { name: String },
    /// Plots.
    Plot {
        #[command(subcommand)]
        kind: PlotKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IsrwCheck {
    Kernel,
    Domination,
    Facts,
    Boundary,
}

#[derive(Subcommand)]
enum PlotKind {
    /// Space-time diagram of a trajectory exported by `simulate`.
    #[command(allow_negative_numbers = true)]
    Spacetime {
        /// Directory written by `simulate`.
        #[arg(long)]
        input: PathBuf,
        /// Highlight the ζ-path started at this site at time 0.
        #[arg(long)]
        path_from: Option<i64>,
    },
}

enum Failure {
    Usage(String),
    Assertion(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}\n\nRun `ssepwalk --help` for usage.");
            ExitCode::from(2)
        }
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(c: &Common, base: ExperimentConfig) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => {
            if !p.exists() {
                return Err(Failure::Usage(format!("config file {} not found", p.display())));
            }
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            // merge the file over the experiment's defaults
            let mut v = serde_json::to_value(&base).expect("config serialises");
            let file: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            let Some(obj) = file.as_object() else {
                return Err(Failure::Usage(format!("{}: expected a JSON object", p.display())));
            };
            for (k, val) in obj {
                v[k] = val.clone();
            }
            ExperimentConfig::from_json(&v.to_string())?
        }
        None => base,
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.replicas {
        cfg.replicas = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, body: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
    println!("{}", p.display());
    Ok(p)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    match &cli.cmd {
        Cmd::Simulate { lo, hi, horizon } => {
            let cfg = load_config(c, ExperimentConfig::default())?;
            let win = Window::closed(*lo, *hi, *horizon)?;
            let seeds = ReplicaSeeds::new(cfg.seed, 0);
            let field = ArrowField::sample(&win, seeds.arrows)?;
            let eta = Configuration::sample(cfg.rho, &win, seeds.config)?;
            let traj = Trajectory::new(field, eta.clone())?;
            let grid = traj.grid(*lo, *hi + 1, 0, horizon.floor() as i64)?;
            write(&c.out, "window.json", &json(&win))?;
            write(&c.out, "arrows.csv", &arrows_csv(traj.field(), *lo, *hi))?;
            let init: String = std::iter::once("x,occupancy".to_string())
                .chain((*lo..=*hi).map(|x| format!("{x},{}", eta.get(x).unwrap_or(0))))
                .collect::<Vec<_>>()
                .join("\n");
            write(&c.out, "initial.csv", &(init + "\n"))?;
            write(&c.out, "grid.csv", &grid_csv(&grid))?;
        }
        Cmd::Walk => {
            let cfg = load_config(c, ExperimentConfig::default())?;
            let rates = cfg.rates()?;
            let seeds = ReplicaSeeds::new(cfg.seed, 0);
            let half = (2.0 * cfg.horizon).ceil() as i64 + 20;
            let win = Window::new(-half, half, cfg.horizon)?;
            let p = EnvParams { window: win, rho: cfg.rho, arrows_seed: seeds.arrows, config_seed: seeds.config, pareto_index: cfg.pareto_index };
            let env = preset(&cfg.environment)?.build(&p)?;
            let walk = simulate_walk_with_seeds(env.as_ref(), &rates, cfg.horizon, seeds.clock, seeds.marks)?;
            match c.format {
                Format::Csv => write(&c.out, "walk.csv", &walk.to_csv())?,
                Format::Json => write(&c.out, "walk.json", &json(&walk.summary_json(cfg.seed)))?,
            };
            if !walk.verify_representation() || walk.sandwich_violations() > 0 {
                return Err(Failure::Assertion("walk identities violated".into()));
            }
        }
        Cmd::Blocks { r, nx, nt } => {
            let cfg = load_config(c, ExperimentConfig::default())?;
            let sched = cfg.schedule(*r + 1)?;
            let d = sched.delta(*r)?;
            let dp = sched.delta(*r + 1)?;
            // room for every superblock and the parents' neighbourhoods
            let (x0, x1) = (-6 * dp, nx * d + 6 * dp);
            let t1 = nt * d + 2 * dp;
            let win = Window::new(x0, x1, (t1 + 2 * dp) as f64)?;
            let seeds = ReplicaSeeds::new(cfg.seed, 0);
            let p = EnvParams { window: win, rho: cfg.rho, arrows_seed: seeds.arrows, config_seed: seeds.config, pareto_index: cfg.pareto_index };
            let env = preset(&cfg.environment)?.build(&p)?;
            let a = BlockAnalyzer::new(env.as_ref(), &sched, x0, x1, 0, t1 + dp)?;
            let ids = blocks_in(&sched, *r, 0, nx * d, 2 * dp, 2 * dp + nt * d)?;
            let rows = ids.iter().map(|&id| a.verdict(id)).collect::<ssepwalk::Result<Vec<_>>>()?;
            match c.format {
                Format::Csv => write(&c.out, "blocks.csv", &verdicts_csv(&rows))?,
                Format::Json => write(&c.out, "blocks.json", &json(&rows))?,
            };
            write(&c.out, "blocks.svg", &verdicts_svg(&rows, &sched)?)?;
        }
        Cmd::Perc { dim, size, p, ell } => {
            let cfg = load_config(c, ExperimentConfig::default())?;
            let half = (*size / 2) as i64;
            let sys = PercSystem::bernoulli(*dim, 1.0, vec![-half; *dim], vec![*size; *dim], *p, cfg.seed)?;
            let res = psi_sup_oracle(*ell, &sys)?;
            write(&c.out, "perc.csv", &sys.to_csv())?;
            write(&c.out, "perc.json", &json(&res))?;
        }
        Cmd::Isrw { check, t } => {
            let cfg = load_config(c, ExperimentConfig::default())?;
            match check {
                IsrwCheck::Kernel => {
                    let k = srw_kernel(*t, None, DEFAULT_TOL)?;
                    write(&c.out, "kernel.csv", &k.to_csv())?;
                }
                IsrwCheck::Domination => {
                    let rep = domination_check(0, 5, 3, &[0.5, 1.0, 2.0], &[0.25, 0.5, 1.0], 1e-9)?;
                    write(&c.out, "domination.json", &json(&rep))?;
                    if !rep.passed() {
                        return Err(Failure::Assertion(format!("{} domination violations", rep.violations.len())));
                    }
                }
                IsrwCheck::Facts => {
                    let rep = srw_facts_check(&[1.0, 4.0, 16.0, 64.0, 100.0], &[1, 2, 4])?;
                    write(&c.out, "srw_facts.json", &json(&rep))?;
                }
                IsrwCheck::Boundary => {
                    let sched = cfg.schedule(2)?;
                    let est = boundary_probability(&sched, 2, cfg.rho, cfg.replicas, cfg.seed)?;
                    write(&c.out, "boundary.json", &json(&est))?;
                    if est.mismatches > 0 {
                        return Err(Failure::Assertion(format!("{} windows with hat-sigma != sigma on A", est.mismatches)));
                    }
                }
            }
        }
        Cmd::Experiment { name } => {
            if name == "list" {
                for e in experiments() {
                    println!("{:<12} {}", e.name(), e.describe());
                }
                return Ok(());
            }
            let exp = experiment(name)?;
            let cfg = load_config(c, exp.default_config())?;
            let rep = exp.run(&cfg)?;
            let paths = rep.write(&c.out)?;
            for p in paths {
                println!("{}", p.display());
            }
            if name == "pilot" {
                if let Some(cal) = rep.notes.last() {
                    write(&c.out, "desk.json", cal)?;
                }
            }
            let failed: Vec<&str> = rep.assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(Failure::Assertion(failed.join(", ")));
            }
        }
        Cmd::Plot { kind: PlotKind::Spacetime { input, path_from } } => {
            let svg = plot_spacetime(input, *path_from)?;
            write(&c.out, "spacetime.svg", &svg)?;
        }
    }
    Ok(())
}

fn plot_spacetime(dir: &Path, path_from: Option<i64>) -> anyhow::Result<String> {
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).with_context(|| format!("reading {}/{name}", dir.display()));
    let win: Window = serde_json::from_str(&read("window.json")?)?;
    let mut events = Vec::new();
    for line in read("arrows.csv")?.lines().skip(1).filter(|l| !l.is_empty()) {
        let (e, t) = line.split_once(',').context("malformed arrows.csv")?;
        events.push((e.parse::<i64>()?, t.parse::<f64>()?));
    }
    let field = ArrowField::from_events(&win, &events)?;
    let mut occ = Vec::new();
    for line in read("initial.csv")?.lines().skip(1).filter(|l| !l.is_empty()) {
        let (_, v) = line.split_once(',').context("malformed initial.csv")?;
        occ.push(v.parse::<u8>()?);
    }
    if occ.len() != win.n_sites() {
        bail!("initial.csv has {} sites, window has {}", occ.len(), win.n_sites());
    }
    Ok(spacetime_svg(&field, win.lo(), win.hi(), win.t_max, Some(&occ), path_from))
}
