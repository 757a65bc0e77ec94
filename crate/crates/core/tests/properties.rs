use evgen_core::attributes::{adaptive_battery, max_pairwise_distance, EnergyConfig, DEMAND_HIGH, DEMAND_TOTAL_CAP};
use evgen_core::config::{standard_station_count, GeneratorConfig, Regime};
use evgen_core::io::{parse_instance_text, write_instance_text};
use evgen_core::metadata::{MetadataRecord, Status};
use evgen_core::model::{euclidean_distance, Point};
use evgen_core::pipeline::{generate_one, sample_instance};
use evgen_core::screening::screen;
use evgen_core::solver::{evaluate_solution, solve, SolverParams};
use evgen_core::spatial::SpatialFamily;
use evgen_core::stations::{filter_stations, StationConfig};
use evgen_core::EPS;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = SpatialFamily> {
    prop::sample::select(SpatialFamily::ALL.to_vec())
}

fn regime() -> impl Strategy<Value = Regime> {
    prop::sample::select(Regime::ALL.to_vec())
}

fn config(max_n: usize) -> impl Strategy<Value = GeneratorConfig> {
    (family(), regime(), 1..=max_n).prop_map(|(f, r, n)| GeneratorConfig::cell(f, r, n, standard_station_count(n)))
}

fn point() -> impl Strategy<Value = Point> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_format_roundtrips(cfg in config(80), seed in any::<u32>()) {
        let (inst, _) = sample_instance(&cfg, seed as u64).unwrap();
        let text = write_instance_text(&inst);
        let back = parse_instance_text(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(write_instance_text(&back), text);
    }

    #[test]
    fn sampled_instances_are_well_formed(cfg in config(80), seed in any::<u32>()) {
        let (inst, _) = sample_instance(&cfg, seed as u64).unwrap();
        prop_assert!(inst.validate().is_ok());
        prop_assert_eq!(inst.customer_count(), cfg.customers());
        prop_assert_eq!(inst.station_count(), cfg.stations.target_count);
        let q = inst.vehicle.capacity;
        prop_assert!(inst.total_demand() <= DEMAND_TOTAL_CAP * q * (1.0 + 1e-9));
        let h = inst.horizon;
        for c in &inst.customers {
            prop_assert!(c.position().in_unit_square());
            prop_assert!(c.demand > 0.0 && c.demand <= DEMAND_HIGH * q + EPS);
            prop_assert!(c.window.earliest >= -EPS && c.window.latest <= h + EPS);
            prop_assert!(c.window.earliest <= c.window.latest);
        }
    }

    #[test]
    fn outcome_metadata_is_consistent(cfg in config(30), seed in any::<u32>()) {
        let out = generate_one(&cfg, seed as u64).unwrap();
        let meta = &out.metadata;
        prop_assert!(meta.validate().is_ok());
        prop_assert_eq!(meta.seed, seed as u64);
        prop_assert_eq!(out.accepted(), meta.status == Status::Feasible);
        let report = screen(&out.instance);
        prop_assert_eq!(&report, &meta.screening);
        if out.accepted() {
            prop_assert!(report.passed);
        }
        if !report.passed {
            prop_assert!(!out.accepted());
            prop_assert!(meta.verification.is_skipped());
        }
        let back = MetadataRecord::from_json(&meta.to_json()).unwrap();
        prop_assert_eq!(&back, meta);
    }

    #[test]
    fn station_filter_respects_spacing(
        candidates in prop::collection::vec(point(), 0..40),
        customers in prop::collection::vec(point(), 1..30),
        range in 0.05f64..0.8,
    ) {
        let cfg = StationConfig::default();
        let kept = filter_stations(&candidates, &customers, range, &cfg);
        prop_assert!(kept.len() <= candidates.len());
        for (i, s) in kept.iter().enumerate() {
            prop_assert!(candidates.contains(s));
            for c in &customers {
                prop_assert!(euclidean_distance(*s, *c) >= cfg.customer_clearance);
            }
            for t in &kept[i + 1..] {
                prop_assert!(euclidean_distance(*s, *t) >= cfg.station_separation * range);
            }
        }
        // Filtering is idempotent on its own output.
        prop_assert_eq!(filter_stations(&kept, &customers, range, &cfg), kept);
    }

    #[test]
    fn adaptive_battery_stays_in_band(
        customers in prop::collection::vec(point(), 0..40),
        rate in 0.05f64..2.0,
    ) {
        let cfg = EnergyConfig::default();
        let b = adaptive_battery(&customers, rate, &cfg);
        prop_assert!(b >= rate * cfg.range_min * (1.0 - 1e-12));
        prop_assert!(b <= rate * cfg.range_max * (1.0 + 1e-12));
        let target = cfg.kappa * max_pairwise_distance(&customers);
        if target > cfg.range_min && target < cfg.range_max {
            prop_assert!((b - rate * target).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_output_passes_evaluation(cfg in config(10), seed in 0u64..2_000) {
        let inst = generate_one(&cfg, seed).unwrap().instance;
        let params = SolverParams { max_iterations: 20, time_budget_secs: 1.0, ..Default::default() };
        if let Ok(sol) = solve(&inst, &params) {
            let metrics = evaluate_solution(&inst, &sol).unwrap();
            prop_assert!((metrics.total_distance - sol.total_distance).abs() <= 1e-6);
            prop_assert_eq!(metrics.ev_count, sol.ev_count());
        }
    }
}
