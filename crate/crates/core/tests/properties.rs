mod common;

use layercache::analysis::{
    expected_working_set, miss_probability, solve_characteristic_time, ClockMode, Shape, DEFAULT_TOL,
};
use layercache::policies::{
    build_policy, hlfu_static_placement, static_optimal, NextAccessIndex, DEFAULT_TABLE_CAP,
};
use layercache::sim::{run_simulation, simulate_outcomes, SimOptions};
use layercache::workload::{
    parametric_layer_sizes, parametric_version_popularity, random_layer_sizes, sample_trace, seeded_rng,
    split_versions_three, split_versions_two, split_versions_uniform_decreasing, zipf_object_popularity, Trace,
};
use layercache::{Catalog, OverheadModel, PolicyKind};
use proptest::prelude::*;
use rand::Rng;

fn catalog_strategy(max_objects: usize, max_versions: usize) -> impl Strategy<Value = Catalog> {
    (1..=max_objects, 1..=max_versions).prop_flat_map(|(d, v)| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..5.0, v), d),
            prop::collection::vec(prop::collection::vec(0.01f64..1.0, v), d),
        )
            .prop_map(|(mut sizes, rates)| {
                for row in &mut sizes {
                    row[0] += 0.1;
                }
                Catalog::from_rows(&sizes, None, &rates).unwrap()
            })
    })
}

/// Catalog with MR sizes satisfying the hybrid feasibility condition.
fn mr_catalog_strategy(max_objects: usize, max_versions: usize) -> impl Strategy<Value = Catalog> {
    (1..=max_objects, 1..=max_versions).prop_flat_map(|(d, v)| {
        (
            prop::collection::vec((2.0f64..5.0, prop::collection::vec(0.1f64..1.0, v)), d),
            prop::collection::vec(prop::collection::vec(0.01f64..1.0, v), d),
            0.0f64..30.0,
        )
            .prop_map(move |(mr, rates, o)| {
                let mr: Vec<Vec<f64>> = mr
                    .into_iter()
                    .map(|(base, inc)| {
                        let mut s = base;
                        (0..v)
                            .map(|i| {
                                if i > 0 {
                                    s += inc[i];
                                }
                                s
                            })
                            .collect()
                    })
                    .collect();
                Catalog::with_overhead(&mr, OverheadModel::new(o).unwrap(), &rates).unwrap()
            })
    })
}

fn trace_for(cat: &Catalog, len: usize, seed: u64) -> Trace {
    sample_trace(&cat.popularity().unwrap(), len, false, &mut seeded_rng(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn suffix_sum_identity_and_normalization(cat in catalog_strategy(8, 4), c in 0.1f64..10.0) {
        let pop = cat.popularity().unwrap();
        for d in 0..cat.num_objects() {
            for l in 0..cat.num_versions() {
                let next = if l + 1 < cat.num_versions() { pop.layer_rate(d, l + 1) } else { 0.0 };
                prop_assert!((pop.layer_rate(d, l) - next - cat.rate(d, l)).abs() <= 1e-12);
                prop_assert!((0.0..=1.0).contains(&pop.layer_prob(d, l)));
            }
        }
        let scaled = cat.scaled_rates(c).unwrap().popularity().unwrap();
        for (a, b) in pop.layer_probs().iter().zip(scaled.layer_probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in pop.version_probs().iter().zip(scaled.version_probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn version_sizes_increase_with_positive_layers(cat in catalog_strategy(6, 4)) {
        for d in 0..cat.num_objects() {
            for v in 1..cat.num_versions() {
                if cat.layer_size(d, v) > 0.0 {
                    prop_assert!(cat.lr_size(d, v) > cat.lr_size(d, v - 1));
                }
            }
        }
    }

    #[test]
    fn mr_never_exceeds_lr(cat in mr_catalog_strategy(6, 4)) {
        for d in 0..cat.num_objects() {
            for v in 0..cat.num_versions() {
                prop_assert!(cat.mr_size(d, v).unwrap() <= cat.lr_size(d, v) + 1e-12);
            }
        }
    }

    #[test]
    fn splits_preserve_mass(q in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0, v in 1usize..6, seed: u64) {
        let two = split_versions_two(q, a).unwrap();
        prop_assert!((two.iter().sum::<f64>() - q).abs() <= 1e-12);
        let (z, e) = (a * (1.0 - b), b * (1.0 - a));
        let three = split_versions_three(q, z, e).unwrap();
        prop_assert!((three.iter().sum::<f64>() - q).abs() <= 1e-12);
        let parts = split_versions_uniform_decreasing(q.max(1e-3), v, &mut seeded_rng(seed));
        prop_assert_eq!(parts.len(), v);
        prop_assert!((parts.iter().sum::<f64>() - q.max(1e-3)).abs() <= 1e-12);
        prop_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn parametric_shapes(v in 1usize..10, m in 0.0f64..3.0, n in 0.0f64..3.0) {
        let g = parametric_version_popularity(v, m);
        prop_assert!((g.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(g.windows(2).all(|w| w[0] >= w[1]));
        let s = parametric_layer_sizes(v, n);
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zipf_and_compositions(d in 1usize..200, s in 0.0f64..2.0, v in 1usize..6, extra in 0u64..300, seed: u64) {
        let q = zipf_object_popularity(d, s).unwrap();
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(q.windows(2).all(|w| w[0] >= w[1]));
        let total = v as u64 + extra;
        let parts = random_layer_sizes(v, total, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(parts.iter().sum::<u64>(), total);
        prop_assert!(parts.iter().all(|&p| p >= 1));
    }

    #[test]
    fn traces_reproducible_and_round_trip(cat in catalog_strategy(6, 3), seed: u64) {
        let a = trace_for(&cat, 200, seed);
        let b = trace_for(&cat, 200, seed);
        prop_assert_eq!(&a.entries, &b.entries);
        a.validate(cat.num_objects(), cat.num_versions()).unwrap();
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        let back = Trace::read_from(&buf[..]).unwrap();
        prop_assert_eq!(back.entries, a.entries);
    }

    #[test]
    fn miss_probability_bounds(p in 0.0f64..1.0, rate in 0.0f64..5.0, t1 in 1.0f64..1e4, dt in 0.0f64..1e4) {
        for mode in [ClockMode::DiscreteBernoulli, ClockMode::ContinuousPoisson] {
            let a = miss_probability(mode, p, rate, t1);
            let b = miss_probability(mode, p, rate, t1 + dt);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a + 1e-15);
        }
    }

    #[test]
    fn working_set_bounded_and_increasing(cat in catalog_strategy(8, 4), t in 1.0f64..500.0, dt in 0.5f64..100.0) {
        let pop = cat.popularity().unwrap();
        let total = cat.total_lr_size();
        for mode in [ClockMode::DiscreteBernoulli, ClockMode::ContinuousPoisson] {
            let a = expected_working_set(&pop, &cat, t, mode).unwrap();
            let b = expected_working_set(&pop, &cat, t + dt, mode).unwrap();
            prop_assert!((0.0..=total + 1e-9).contains(&a));
            prop_assert!(b >= a - 1e-9);
            if a < total * (1.0 - 1e-9) {
                prop_assert!(b > a);
            }
        }
    }

    #[test]
    fn fixed_point_properties(cat in catalog_strategy(8, 4).prop_filter("one object requests every slot", |c| c.num_objects() > 1), f1 in 0.05f64..0.95, f2 in 0.05f64..0.95) {
        let pop = cat.popularity().unwrap();
        let total = cat.total_lr_size();
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let mode = ClockMode::DiscreteBernoulli;
        let a = solve_characteristic_time(&pop, &cat, lo * total, mode, DEFAULT_TOL).unwrap();
        let b = solve_characteristic_time(&pop, &cat, hi * total, mode, DEFAULT_TOL).unwrap();
        if a.characteristic_time.is_finite() {
            let ws = expected_working_set(&pop, &cat, a.characteristic_time, mode).unwrap();
            prop_assert!((ws - lo * total).abs() <= 1e-6 * total);
        }
        for d in 0..cat.num_objects() {
            for l in 0..cat.num_versions() {
                if l + 1 < cat.num_versions() {
                    prop_assert!(a.hit(d, l + 1) <= a.hit(d, l) + 1e-12);
                }
                prop_assert!(b.hit(d, l) >= a.hit(d, l) - 1e-9);
            }
        }
        prop_assert!(b.hit_rate(&pop) >= a.hit_rate(&pop) - 1e-9);
    }

    #[test]
    fn shapes_are_distributions(s in 0.0f64..0.99, k in 0.1f64..100.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        for shape in [Shape::Uniform, Shape::PowerLaw { exponent: s }, Shape::Logarithmic { scale: k }] {
            prop_assert!(shape.cdf(0.0).abs() <= 1e-12);
            prop_assert!((shape.cdf(1.0) - 1.0).abs() <= 1e-12);
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(shape.cdf(lo) <= shape.cdf(hi) + 1e-15);
        }
    }

    #[test]
    fn online_policies_keep_invariants(cat in mr_catalog_strategy(10, 3), frac in 0.0f64..1.2, seed: u64) {
        let budget = cat.total_lr_size() * frac;
        let trace = trace_for(&cat, 400, seed);
        for kind in [PolicyKind::Llru, PolicyKind::Llfu, PolicyKind::MrLru, PolicyKind::Hlru] {
            let mut p = build_policy(kind, &cat, budget, 1.0).unwrap();
            for r in &trace.entries {
                let before = p.occupancy();
                let out = p.access(r.object(), r.version());
                if let Err(e) = p.check_invariants() {
                    return Err(TestCaseError::fail(format!("{kind}: {e}")));
                }
                if out.hit && kind != PolicyKind::Hlru {
                    prop_assert_eq!(out.evicted_units, 0);
                    prop_assert!(p.occupancy() <= before + 1e-12);
                }
            }
        }
    }

    #[test]
    fn next_access_layers_ordered(cat in catalog_strategy(5, 4), seed: u64) {
        let trace = trace_for(&cat, 100, seed);
        let idx = NextAccessIndex::build(&trace, cat.num_objects(), cat.num_versions()).unwrap();
        for t in 0..trace.len() as u64 {
            for d in 0..cat.num_objects() {
                for l in 0..cat.num_versions() - 1 {
                    prop_assert!(idx.next_after(t, d, l) <= idx.next_after(t, d, l + 1));
                }
            }
        }
    }

    #[test]
    fn static_opt_dominates(seed: u64, frac in 0.0f64..1.0) {
        // Integer sizes keep the knapsack exact; MR sizes equal the layered
        // ones so every hybrid placement is feasible.
        let mut rng = seeded_rng(seed);
        let d = rng.random_range(1..=8);
        let v = rng.random_range(1..=3);
        let layered = common::random_integer_catalog(&mut rng, d, v, 5);
        let layers: Vec<Vec<f64>> = (0..d).map(|o| layered.layer_sizes(o).to_vec()).collect();
        let mr: Vec<Vec<f64>> = (0..d).map(|o| (0..v).map(|x| layered.lr_size(o, x)).collect()).collect();
        let rates: Vec<Vec<f64>> = (0..d).map(|o| layered.rates(o).to_vec()).collect();
        let Ok(cat) = Catalog::from_rows(&layers, Some(&mr), &rates) else {
            // Zero-size upper layers give equal MR sizes, which are rejected.
            return Ok(());
        };
        let budget = (cat.total_lr_size() * frac).floor();
        let opt = static_optimal(&cat, budget, 1.0, DEFAULT_TABLE_CAP).unwrap();
        prop_assert!(opt.size <= budget + 1e-9);
        let hybrid = hlfu_static_placement(&cat, budget).unwrap();
        prop_assert!(hybrid.value <= opt.value + 1e-9);
        for _ in 0..4 {
            let prefix: Vec<usize> = (0..d).map(|_| rng.random_range(0..=v)).collect();
            let size: f64 = prefix.iter().enumerate().map(|(o, &k)| if k == 0 { 0.0 } else { cat.lr_size(o, k - 1) }).sum();
            if size <= budget {
                prop_assert!(common::prefix_value(&cat, &prefix) <= opt.value + 1e-9);
            }
        }
    }

    #[test]
    fn static_opt_matches_enumeration(seed: u64) {
        let mut rng = seeded_rng(seed);
        let d = rng.random_range(1..=5);
        let v = rng.random_range(1..=3);
        let cat = common::random_integer_catalog(&mut rng, d, v, 5);
        let budget = rng.random_range(0..=cat.total_lr_size() as u32) as f64;
        let p = static_optimal(&cat, budget, 1.0, DEFAULT_TABLE_CAP).unwrap();
        prop_assert_eq!(common::prefix_value(&cat, &p.prefix), common::enumerate_static_opt(&cat, budget));
    }

    #[test]
    fn offline_minimum_bounds_every_policy(
        d in 1usize..=3, v in 1usize..=2, b in 1usize..=3,
        raw in prop::collection::vec((0usize..3, 0usize..2), 1..=12),
    ) {
        let pairs: Vec<(usize, usize)> = raw.into_iter().map(|(x, y)| (x % d, y % v)).collect();
        let cat = common::unit_catalog(d, v);
        let trace = Trace::from_pairs(&pairs);
        let misses = |k| simulate_outcomes(k, &cat, b as f64, &trace, 1.0).unwrap().iter().filter(|o| !o.hit).count() as u32;
        let best = common::offline_min_misses(d, b, &pairs);
        for k in [PolicyKind::LBelady, PolicyKind::Llru, PolicyKind::Llfu] {
            prop_assert!(best <= misses(k), "{k} beat the exhaustive optimum");
        }
        if v == 1 {
            prop_assert_eq!(misses(PolicyKind::LBelady), best);
        }
    }

    #[test]
    fn reports_are_consistent(cat in mr_catalog_strategy(8, 3), frac in 0.0f64..1.0, seed: u64) {
        let budget = cat.total_lr_size() * frac;
        let trace = trace_for(&cat, 300, seed);
        for kind in PolicyKind::ALL {
            let r = run_simulation(kind, &cat, budget, &trace, &SimOptions::default()).unwrap();
            prop_assert_eq!(r.total_requests(), 300);
            prop_assert_eq!(r.total_hits() + r.total_misses(), 300);
            prop_assert!(r.version_hits.iter().zip(&r.version_requests).all(|(h, n)| h <= n));
            let h = r.hit_rate().unwrap();
            prop_assert!((0.0..=1.0).contains(&h));
            let again = run_simulation(kind, &cat, budget, &trace, &SimOptions::default()).unwrap();
            prop_assert_eq!(r, again);
        }
    }

    #[test]
    fn single_version_collapse(n in 1usize..20, sizes_seed: u64, frac in 0.05f64..1.0, seed: u64) {
        let mut rng = seeded_rng(sizes_seed);
        let mr: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.5..3.0)]).collect();
        let rates: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.01..1.0)]).collect();
        let cat = Catalog::with_overhead(&mr, OverheadModel::new(0.0).unwrap(), &rates).unwrap();
        let sizes: Vec<f64> = mr.iter().map(|r| r[0]).collect();
        let budget = cat.total_lr_size() * frac;
        let trace = trace_for(&cat, 500, seed);
        let hits = |k| simulate_outcomes(k, &cat, budget, &trace, 1.0).unwrap().iter().map(|o| o.hit).collect::<Vec<_>>();
        let lru = common::textbook_lru(&sizes, budget, &trace);
        prop_assert_eq!(hits(PolicyKind::Llru), lru.clone());
        prop_assert_eq!(hits(PolicyKind::MrLru), lru.clone());
        prop_assert_eq!(hits(PolicyKind::Hlru), lru);
        prop_assert_eq!(hits(PolicyKind::Llfu), common::textbook_lfu(&sizes, budget, &trace));
        prop_assert_eq!(hits(PolicyKind::LBelady), common::textbook_belady(&sizes, budget, &trace));
    }
}

/// Farthest-next-use is not optimal once a request needs several layers:
/// at step 3 LBelady keeps object 0's first layer for a request that misses
/// anyway, and loses the later hit on object 2.
#[test]
fn lbelady_can_exceed_the_offline_minimum() {
    let pairs = [(0, 0), (2, 0), (1, 1), (0, 1), (2, 0)];
    let cat = common::unit_catalog(3, 2);
    let trace = Trace::from_pairs(&pairs);
    let outcomes = simulate_outcomes(PolicyKind::LBelady, &cat, 3.0, &trace, 1.0).unwrap();
    assert_eq!(outcomes.iter().filter(|o| !o.hit).count(), 5);
    assert_eq!(common::offline_min_misses(3, 3, &pairs), 4);
}
