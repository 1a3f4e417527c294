//! Property tests for the invariants every module relies on.

use proptest::prelude::*;
use ssepwalk::graphical::{ArrowField, Configuration, Trajectory, Window};
use ssepwalk::harness::{wilson, ExperimentConfig, Z95};
use ssepwalk::isrw::srw_kernel;
use ssepwalk::percolation::{
    bernstein_bound, binomial_upper_tail, psi, psi_sup_oracle, PercSystem, Polyline,
};
use ssepwalk::walker::{simulate_walk, RateSet};

fn traj(len: i64, t: f64, rho: f64, seed: u64) -> Trajectory {
    let w = Window::closed(0, len - 1, t).unwrap();
    Trajectory::new(ArrowField::sample(&w, seed).unwrap(), Configuration::sample(rho, &w, seed ^ 0xabc).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn particle_count_is_conserved(len in 2i64..40, t in 0.1f64..8.0, rho in 0.0f64..=1.0, seed in any::<u64>(), u in 0.0f64..1.0) {
        let tr = traj(len, t, rho, seed);
        prop_assert_eq!(tr.config_at(u * t).unwrap().particle_count(), tr.particle_count());
    }

    #[test]
    fn tracing_is_a_bijection(len in 2i64..30, t in 0.1f64..6.0, seed in any::<u64>(), a in 0.0f64..1.0) {
        let tr = traj(len, t, 0.5, seed);
        let s = a * t;
        let mut image: Vec<i64> = (0..len).map(|x| tr.field().trace(x, t, s).unwrap()).collect();
        for (x, &y) in image.iter().enumerate() {
            prop_assert_eq!(tr.field().trace(y, s, t).unwrap(), x as i64);
        }
        image.sort_unstable();
        prop_assert_eq!(image, (0..len).collect::<Vec<_>>());
    }

    #[test]
    fn duality_holds_pointwise(len in 2i64..30, t in 0.1f64..6.0, seed in any::<u64>(), a in 0.0f64..1.0, xf in 0.0f64..1.0) {
        let tr = traj(len, t, 0.5, seed);
        let (s, x) = (a * t, ((len - 1) as f64 * xf) as i64);
        let y = tr.field().trace(x, t, s).unwrap();
        prop_assert_eq!(tr.config_at(t).unwrap().get(x).unwrap(), tr.config_at(s).unwrap().get(y).unwrap());
    }

    #[test]
    fn walk_identities(g in 0.5f64..2.0, b1 in 0.01f64..0.4, b0 in 0.45f64..0.99, seed in any::<u64>()) {
        // α_i + β_i = γ, v1 > v0
        let rates = RateSet::new(g * (1.0 - b0), g * b0, g * (1.0 - b1), g * b1).unwrap();
        let w = Window::new(-80, 80, 30.0).unwrap();
        let env = Trajectory::new(ArrowField::sample(&w, seed).unwrap(), Configuration::sample(0.5, &w, !seed).unwrap()).unwrap();
        let walk = simulate_walk(&env, &rates, 30.0, seed).unwrap();
        prop_assert!(walk.verify_representation());
        prop_assert_eq!(walk.sandwich_violations(), 0);
        let (n1, n0) = walk.jump_counts(30.0);
        prop_assert_eq!(n1 + n0, walk.clock_count(30.0));
    }

    #[test]
    fn bernstein_dominates_the_exact_tail(n in 1u64..40, p in 0.01f64..0.99, x in 0.1f64..40.0) {
        let exact = binomial_upper_tail(n, p, x);
        let bound = bernstein_bound(n, p * (1.0 - p), 1.0, x).unwrap();
        prop_assert!(exact <= bound + 1e-12, "{} > {}", exact, bound);
    }

    #[test]
    fn kernel_rows_are_probabilities(t in 0.0f64..30.0, y in -5i64..5) {
        let k = srw_kernel(t, None, 1e-12).unwrap();
        let (lo, hi) = k.support();
        let total: f64 = (lo..=hi).map(|z| k.prob(y, y + z)).sum();
        prop_assert!((total - 1.0).abs() <= k.error + 1e-12);
        // symmetric
        prop_assert!((k.prob(y, y + 3) - k.prob(y, y - 3)).abs() < 1e-15);
    }

    #[test]
    fn wilson_contains_the_point_estimate(n in 1usize..500, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as usize;
        let (lo, hi) = wilson(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn config_json_round_trip(seed in any::<u64>(), rho in 0.01f64..0.99, reps in 1usize..1000) {
        let cfg = ExperimentConfig { seed, rho, replicas: reps, ..Default::default() };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn opening_blocks_never_lowers_psi(seed in any::<u64>(), extra in any::<u64>(), ell in 0.2f64..1.4,
                                        pts in prop::collection::vec((-1.9f64..2.9, -1.9f64..2.9), 1..4)) {
        let sys = PercSystem::bernoulli(2, 1.0, vec![-2, -2], vec![5, 5], 0.4, seed).unwrap();
        let mut more = sys.clone();
        for (k, idx) in sys.indices().collect::<Vec<_>>().into_iter().enumerate() {
            if extra >> (k % 64) & 1 == 1 {
                more.set_open(&idx, true).unwrap();
            }
        }
        let mut verts = vec![(0.0, 0.0)];
        verts.extend(pts);
        let w = Polyline::planar(&verts).unwrap();
        prop_assert!(psi(&w, &sys).unwrap() <= psi(&w, &more).unwrap());
        let (a, b) = (psi_sup_oracle(ell, &sys).unwrap(), psi_sup_oracle(ell, &more).unwrap());
        prop_assert!(a.value <= b.value);
        // the witness attains the optimum
        let wit = a.witness.unwrap();
        prop_assert_eq!(psi(&wit, &sys).unwrap(), a.value);
    }
}
