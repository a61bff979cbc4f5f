mod common;

use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use proxycache::analytics::{
    aggregate_bandwidth, hit_miss_on_demand, miss_probability, top_c_mass, top_c_mass_asymptotic,
    BandwidthParams, MassMode,
};
use proxycache::cache::{process_session, run_policy, CacheState, Policy, SessionBuffer};
use proxycache::popularity::{power_modulus, zeta_partial_terms, ComplexExponent, ZipfCatalog};
use proxycache::simulator::{fit_power_law, is_non_increasing, run_simulation, SimConfig};
use proxycache::workload::{
    ObjectAttributes, RateConvention, Workload, DEFAULT_CHANNEL_RANGE_MS, DEFAULT_SIZE_RANGE_KB,
};

fn small_workload() -> impl Strategy<Value = (Vec<usize>, usize, usize)> {
    (1usize..12, 1usize..120)
        .prop_flat_map(|(n, r)| (proptest::collection::vec(1..=n, r), Just(n), 1..=r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn catalog_is_normalized_and_decreasing(n in 1usize..5000, alpha in 0.0f64..2.0) {
        let c = ZipfCatalog::new(n, alpha).unwrap();
        let p = c.probabilities();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(is_non_increasing(p));
        let i = n / 2 + 1;
        let expected = c.normalizer() * (i as f64).powf(-alpha);
        prop_assert!((c.probability(i).unwrap() - expected).abs() <= 1e-15 * expected.max(1.0));
    }

    #[test]
    fn modulus_ignores_imaginary_part(n in 1usize..10_000, sigma in 0.01f64..3.0, beta in -50.0f64..50.0) {
        let a = power_modulus(n, ComplexExponent::new(sigma, beta));
        let b = power_modulus(n, ComplexExponent::real(sigma));
        prop_assert!((a - b).abs() <= 1e-12 * b);
        prop_assert!((b - (n as f64).powf(-sigma)).abs() <= 1e-12 * b);
    }

    #[test]
    fn correction_terms_respect_bound(sigma in 0.05f64..3.0, beta in -20.0f64..20.0) {
        let terms = zeta_partial_terms(ComplexExponent::new(sigma, beta), 500).unwrap();
        for t in &terms {
            prop_assert!(t.within_bound(), "n={} |a_n|={} bound={}", t.n, t.value.norm(), t.bound);
        }
    }

    #[test]
    fn miss_probability_monotone(n in 2usize..500, alpha in 0.0f64..1.5, r in 0u64..100_000) {
        let c = ZipfCatalog::new(n, alpha).unwrap();
        let head = miss_probability(&c, 1, r).unwrap();
        let tail = miss_probability(&c, n, r).unwrap();
        prop_assert!(head <= tail + 1e-15);
        prop_assert!(miss_probability(&c, 1, r + 10).unwrap() <= head);
        prop_assert!((0.0..=1.0).contains(&head));
    }

    #[test]
    fn demand_bounded_by_mass(n in 1usize..500, alpha in 0.0f64..1.5, r in 0u64..10_000) {
        let c = ZipfCatalog::new(n, alpha).unwrap();
        let upper = n.div_ceil(2);
        let h = hit_miss_on_demand(&c, r, upper).unwrap();
        let mass: f64 = c.probabilities()[..upper].iter().sum();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= mass + 1e-12);
    }

    #[test]
    fn bandwidth_linear_in_k(k in 0.0f64..=1.0, n in 2usize..300, seed in any::<u64>()) {
        let c = ZipfCatalog::new(n, 0.8).unwrap();
        let attrs = ObjectAttributes::generate(n, DEFAULT_SIZE_RANGE_KB, DEFAULT_CHANNEL_RANGE_MS, seed).unwrap();
        for rate in [RateConvention::Product, RateConvention::Ratio] {
            let one = BandwidthParams::new(1.0, n / 2).unwrap().with_rate(rate);
            let scaled = BandwidthParams::new(k, n / 2).unwrap().with_rate(rate);
            let a1 = aggregate_bandwidth(&attrs, &one, &c, n).unwrap();
            let ak = aggregate_bandwidth(&attrs, &scaled, &c, n).unwrap();
            prop_assert!((ak - k * a1).abs() <= 1e-9 * a1);
        }
    }

    #[test]
    fn steeper_catalogs_concentrate_mass(n in 3usize..3000, a in 0.0f64..1.5, d in 0.01f64..0.5) {
        let c_lo = ZipfCatalog::new(n, a).unwrap();
        let c_hi = ZipfCatalog::new(n, a + d).unwrap();
        let cap = n / 3 + 1;
        prop_assert!(top_c_mass(&c_hi, cap).unwrap() >= top_c_mass(&c_lo, cap).unwrap());
    }

    #[test]
    fn cache_never_overflows_and_hits_mean_resident(
        (requests, _n, _session) in small_workload(),
        capacity in 1usize..6,
    ) {
        let mut cache = CacheState::new(capacity, None).unwrap();
        for &rank in &requests {
            let resident = cache.contains(rank);
            let outcome = cache.access(rank);
            prop_assert_eq!(outcome.hit, resident);
            prop_assert!(cache.contains(rank));
            prop_assert!(cache.len() <= capacity);
            if let Some(v) = outcome.evicted {
                prop_assert!(!outcome.hit);
                prop_assert_ne!(v, rank);
                prop_assert!(!cache.contains(v));
            }
        }
    }

    #[test]
    fn matches_reference_cache((requests, n, session) in small_workload(), capacity in 1usize..6) {
        let w = Workload::new(requests.clone(), n, session, 0).unwrap();
        let got = common::flatten(&run_policy(Policy::SessionLfu, capacity, &w).unwrap());
        prop_assert_eq!(got, common::reference_run(capacity, &requests, session));
    }

    #[test]
    fn session_length_does_not_change_outcomes(
        (requests, n, session) in small_workload(),
        capacity in 1usize..6,
        slack in 0usize..10,
    ) {
        let w = Workload::new(requests.clone(), n, session, 0).unwrap();
        let by_session = run_policy(Policy::SessionLfu, capacity, &w).unwrap();
        prop_assert_eq!(&by_session, &run_policy(Policy::LfuClassic, capacity, &w).unwrap());

        let mut cache = CacheState::new(capacity, None).unwrap();
        let mut buffer = SessionBuffer::new(session + slack).unwrap();
        let mut oversized = Vec::new();
        for chunk in requests.chunks(session) {
            buffer.fill(chunk).unwrap();
            oversized.extend(process_session(&mut cache, &mut buffer).unwrap());
            prop_assert!(buffer.is_empty());
        }
        prop_assert_eq!(by_session, oversized);
    }

    #[test]
    fn warm_ranks_hit_on_first_touch(capacity in 1usize..50, seed in any::<u64>()) {
        let warm: Vec<usize> = (1..=capacity).collect();
        let mut cache = CacheState::new(capacity, Some(&warm)).unwrap();
        prop_assert_eq!(cache.len(), capacity);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order = warm.clone();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        for rank in order {
            prop_assert!(cache.access(rank).hit);
        }
    }

    #[test]
    fn trace_round_trips(n in 1usize..200, r in 1usize..2000, session in 1usize..300, seed in any::<u64>()) {
        let c = ZipfCatalog::new(n, 0.9).unwrap();
        let w = Workload::generate(&c, r, session, seed).unwrap();
        let mut buf = Vec::new();
        w.write_trace(&mut buf).unwrap();
        let back = Workload::parse_trace(std::str::from_utf8(&buf).unwrap(), Path::new("mem")).unwrap();
        prop_assert_eq!(back.requests(), w.requests());
        prop_assert_eq!(back.session_boundaries(), w.session_boundaries());
        prop_assert_eq!(back.n_objects(), n);
    }

    #[test]
    fn simulation_conserves_requests(
        n in 1usize..60,
        alpha in 0.0f64..1.5,
        r in 1usize..3000,
        session in 1usize..200,
        capacity in 1usize..80,
        seed in any::<u64>(),
    ) {
        let config = SimConfig {
            n_objects: n,
            alpha,
            total_requests: r,
            session_size: session,
            capacity,
            seed,
            ..SimConfig::default()
        };
        let a = run_simulation(&config).unwrap();
        let b = run_simulation(&config).unwrap();
        prop_assert_eq!(&a.per_rank, &b.per_rank);
        prop_assert_eq!(a.totals.requests, r as u64);
        prop_assert_eq!(a.totals.hits + a.totals.misses, r as u64);
        for t in &a.per_rank {
            prop_assert_eq!(t.hits + t.misses, t.requests);
        }
    }
}

fn assert_sampler_fits(n: usize, alpha: f64, draws: usize, seed: u64) {
    let c = ZipfCatalog::new(n, alpha).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; n];
    for _ in 0..draws {
        counts[c.sample_rank(&mut rng) - 1] += 1;
    }
    let (stat, dof) = common::chi_square(&counts, c.probabilities(), draws as u64);
    let critical = common::chi_square_critical(dof, 0.001);
    assert!(
        stat < critical,
        "N={n}: chi2 {stat} >= {critical} (dof {dof})"
    );
}

#[test]
fn sampler_matches_catalog() {
    for (n, seed) in [(10, 1), (100, 2), (1000, 3)] {
        assert_sampler_fits(n, 0.8, 1_000_000, seed);
    }
}

#[test]
fn workload_matches_catalog() {
    let c = ZipfCatalog::new(100, 0.64).unwrap();
    let w = Workload::generate(&c, 200_000, 1000, 17).unwrap();
    let (stat, dof) = common::chi_square(w.histogram().counts(), c.probabilities(), w.len() as u64);
    assert!(
        stat < common::chi_square_critical(dof, 0.001),
        "chi2 {stat}"
    );
}

#[test]
fn demand_vanishes_with_many_requests() {
    let c = ZipfCatalog::new(50, 1.0).unwrap();
    let few = hit_miss_on_demand(&c, 1, 50).unwrap();
    let many = hit_miss_on_demand(&c, 1_000_000, 50).unwrap();
    assert!(few > 0.5);
    assert!(many < 1e-12);
}

#[test]
fn corrected_mass_within_ten_percent() {
    for alpha in [0.31, 0.51, 0.75, 0.98] {
        let c = ZipfCatalog::new(10_000, alpha).unwrap();
        for cap in [10, 30, 100, 300, 1000] {
            let exact = top_c_mass(&c, cap).unwrap();
            let approx = top_c_mass_asymptotic(&c, cap, MassMode::Corrected).unwrap();
            assert!(
                (approx - exact).abs() <= 0.1 * exact,
                "alpha {alpha} C {cap}: {approx} vs {exact}"
            );
        }
    }
}

#[test]
fn request_deciles_decrease() {
    let c = ZipfCatalog::new(10_000, 0.7).unwrap();
    let w = Workload::generate(&c, 1_000_000, 1000, 23).unwrap();
    assert!(is_non_increasing(&w.histogram().binned(10)));
}

#[test]
fn log_log_slope_tracks_alpha() {
    let c = ZipfCatalog::new(10_000, 0.7).unwrap();
    let w = Workload::generate(&c, 1_000_000, 1000, 29).unwrap();
    let fit = fit_power_law(&w.histogram(), 100).unwrap();
    assert!((fit.slope + 0.7).abs() <= 0.05, "slope {}", fit.slope);

    let flat = ZipfCatalog::new(10_000, 0.0).unwrap();
    let w = Workload::generate(&flat, 1_000_000, 1000, 31).unwrap();
    let fit = fit_power_law(&w.histogram(), 100).unwrap();
    assert!(fit.slope.abs() <= 0.05, "slope {}", fit.slope);
}
