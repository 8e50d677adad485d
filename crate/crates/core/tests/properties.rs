//! Invariants checked over generated inputs.

use proptest::prelude::*;

use walkhull::aggregates::{expected_facets, single_walk_facets};
use walkhull::cli::config::{Dist, Format, Kind, Options, RunConfig};
use walkhull::cli::output::{fmt_num, Record, Report};
use walkhull::enumeration::{facet_specs, nonabsorption_probability, spec_count, WalkEnsemble};
use walkhull::montecarlo::{estimate, McOptions, Statistic, StepDistribution};
use walkhull::numerics::rational_to_f64;
use walkhull::persistence::PersistenceEvaluator;
use walkhull::simplex_moments::{walk_simplex_moment, weighted_simplex_moment, WalkSimplexQuery, WeightedSimplexQuery};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn ensemble() -> impl Strategy<Value = WalkEnsemble> {
    (1usize..=3, prop::collection::vec(1usize..=3, 1..=3), any::<bool>())
        .prop_filter_map("full-dimensional", |(d, lengths, origin)| {
            WalkEnsemble::new(d, lengths, origin).ok().filter(WalkEnsemble::is_full_dimensional)
        })
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn simplex_moment_grows_with_each_weight(
        d in 1usize..6,
        raw in prop::collection::vec(0.1f64..3.0, 2..6),
        which in 0usize..6,
        bump in 1.01f64..2.0,
        p in 0.5f64..4.0,
    ) {
        let sigmas: Vec<f64> = raw.into_iter().take(d + 1).collect();
        prop_assume!(sigmas.len() >= 2);
        let base = WeightedSimplexQuery { d, sigmas: sigmas.clone(), p };
        let mut larger = sigmas;
        let i = which % larger.len();
        larger[i] *= bump;
        let bigger = WeightedSimplexQuery { d, sigmas: larger, p };
        prop_assert!(weighted_simplex_moment(&bigger).unwrap() > weighted_simplex_moment(&base).unwrap());
    }

    #[test]
    fn walk_with_all_restarts_is_weighted_simplex(
        d in 1usize..6,
        raw in prop::collection::vec(0.1f64..3.0, 7),
        p in 0.5f64..4.0,
    ) {
        let sigmas: Vec<f64> = raw[..=d].to_vec();
        let walk = walk_simplex_moment(&WalkSimplexQuery { d, restart_indices: (0..=d).collect(), sigmas: sigmas.clone(), p }).unwrap();
        let weighted = weighted_simplex_moment(&WeightedSimplexQuery { d, sigmas, p }).unwrap();
        prop_assert!((walk - weighted).abs() <= 1e-12 * weighted);
    }

    #[test]
    fn enumerated_specs_match_closed_count(ens in ensemble()) {
        let listed = facet_specs(&ens).count();
        prop_assert_eq!(num_traits::ToPrimitive::to_usize(&spec_count(&ens)), Some(listed));
    }

    #[test]
    fn persistence_is_monotone(n in 1usize..12, a in -3.0f64..3.0, h in 0.01f64..2.0) {
        let eval = PersistenceEvaluator::with_defaults(n).unwrap();
        let lo = eval.p(n, a).unwrap().value;
        let hi = eval.p(n, a + h).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&lo) && lo <= hi + 1e-12);
        if n > 1 {
            prop_assert!(eval.p(n - 1, a).unwrap().value >= lo - 1e-12);
        }
    }

    #[test]
    fn number_format_has_fifteen_significant_digits(x in prop::num::f64::NORMAL) {
        let s = fmt_num(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-15 * x.abs(), "{} -> {}", x, s);
        let mantissa: String = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect();
        prop_assert_eq!(mantissa.trim_start_matches('0').len(), 15, "{}", s);
    }

    #[test]
    fn report_round_trips_through_json(
        d in prop::option::of(1usize..8),
        lengths in prop::option::of(prop::collection::vec(1usize..20, 1..5)),
        origin in prop::option::of(any::<bool>()),
        kind in prop::option::of(prop_oneof![Just(Kind::Facets), Just(Kind::OriginFacets), Just(Kind::Surface), Just(Kind::Volume)]),
        r in prop::option::of(prop::collection::vec(-5.0f64..5.0, 1..4)),
        samples in prop::option::of(100usize..1_000_000),
        seed in prop::option::of(any::<u64>()),
        rel_tol in prop::option::of(1e-14f64..1e-2),
        dist in prop::option::of(prop_oneof![Just(Dist::Gaussian), Just(Dist::Uniform), Just(Dist::Laplace)]),
        csv in any::<bool>(),
        values in prop::collection::vec(-1e6f64..1e6, 0..6),
    ) {
        let opts = Options {
            d, lengths, origin, kind, r, samples, seed, rel_tol, dist,
            format: Some(if csv { Format::Csv } else { Format::Json }),
            ..Options::default()
        };
        let config = RunConfig::resolve("stats", opts).unwrap();
        let results = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Record::new(format!("row {i}")).num("value", v).int("i", i))
            .collect();
        let report = Report { config, results, warnings: vec!["w".into()], exit_code: 0 };
        let text = serde_json::to_string(&report).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, report);
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn facet_count_at_least_simplex(ens in ensemble()) {
        let facets = expected_facets(&ens).unwrap().value;
        prop_assert!(facets >= ens.d() as f64 + 1.0 - 1e-9, "{:?}: {}", ens, facets);
    }

    #[test]
    fn nonabsorption_matches_simulation(
        d in 1usize..=3,
        lengths in prop::collection::vec(1usize..=4, 1..=3),
        seed in any::<u64>(),
        laplace in any::<bool>(),
    ) {
        let ens = WalkEnsemble::new(d, lengths.clone(), false).unwrap();
        let outside = rational_to_f64(&nonabsorption_probability(d, &lengths).unwrap());
        let dist = if laplace {
            StepDistribution::IsotropicLaplaceRadius { scale: 1.0 }
        } else {
            StepDistribution::StandardGaussian
        };
        let est = estimate(&ens, &dist, Statistic::OriginAbsorbed, &McOptions::new(20_000, seed)).unwrap();
        prop_assert!(est.z_score(1.0 - outside).abs() <= 4.5, "{:?}: {} vs {}", lengths, est.mean, 1.0 - outside);
    }
}

#[test]
fn single_walk_closed_form_matches_spec_sum() {
    for d in 1..=3 {
        for n in d..=5 {
            let ens = WalkEnsemble::new(d, vec![n], true).unwrap();
            let closed = rational_to_f64(&single_walk_facets(n, d).unwrap());
            let summed = expected_facets(&ens).unwrap().value;
            assert!((closed - summed).abs() < 1e-8 * closed, "d={d} n={n}: {closed} vs {summed}");
        }
    }
}
