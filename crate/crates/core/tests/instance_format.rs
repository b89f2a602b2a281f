use fbound::instance::{parse_instance, parse_instance_str, validate_instance, write_instance_string};
use fbound::oracle::{oracle_optimum, OracleConfig};
use fbound::preprocess::{tighten_time_windows, TightenedWindows};
use fbound::solver::{solve_mip, MipLimits, SolveStatus};
use fbound::{formulations::build_v0, generate_synthetic, Dims, Error};
use proptest::prelude::*;

const MICRO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/micro.fbinst");

#[test]
fn golden_micro_instance_round_trips() {
    let inst = parse_instance(MICRO).unwrap();
    assert_eq!(inst.t2[0].cycles.len(), 2);
    assert_eq!(inst.scenarios[0].weight, 1.0);
    assert_eq!(inst.grid.fuel_factor, inst.grid.step_duration);
    let again = parse_instance_str(&write_instance_string(&inst)).unwrap();
    assert_eq!(again, inst);
}

#[test]
fn golden_micro_instance_solves_like_the_oracle() {
    let inst = parse_instance(MICRO).unwrap();
    let oracle = oracle_optimum(&inst, &TightenedWindows::original(&inst), &OracleConfig::default()).unwrap();
    let m = build_v0(&inst, &tighten_time_windows(&inst).unwrap(), false).unwrap();
    let r = solve_mip(&m, &MipLimits::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.primal - oracle.value).abs() <= 1e-7 * oracle.value.abs());
    // Both outage weeks are admissible.
    assert_eq!(oracle.schedules, 2);
}

#[test]
fn missing_header_is_a_syntax_error_on_line_one() {
    let text = std::fs::read_to_string(MICRO).unwrap().replacen("fbinst/1", "fbinst/9", 1);
    match parse_instance_str(&text) {
        Err(Error::Syntax { line: 1, column: 1, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn syntax_error_reports_position() {
    let text = std::fs::read_to_string(MICRO).unwrap().replacen("weeks = 4", "weeks = = 4", 1);
    match parse_instance_str(&text) {
        Err(Error::Syntax { line, column, .. }) => {
            assert_eq!(line, 5);
            assert!(column > 1);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn semantic_errors_are_all_listed() {
    let text = std::fs::read_to_string(MICRO)
        .unwrap()
        .replacen("retention = 0.9", "retention = 1.5", 1)
        .replacen("demand = [50.0, 50.0, 50.0, 50.0]", "weight = 0.5\ndemand = [50.0, 50.0, 50.0]", 1);
    match parse_instance_str(&text) {
        Err(Error::Semantic(v)) => {
            let locs: Vec<&str> = v.iter().map(|x| x.location.as_str()).collect();
            assert!(locs.contains(&"t2[0].cycles[0]"), "{locs:?}");
            assert!(locs.contains(&"scenarios[0].demand"), "{locs:?}");
            assert!(locs.contains(&"scenarios"), "{locs:?}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn dims_parse() {
    assert_eq!("2,2,2,2,16,4".parse::<Dims>().unwrap(), Dims::new(2, 2, 2, 2, 16, 4));
    assert!("2,2,2".parse::<Dims>().is_err());
    assert!("a,2,2,2,16,4".parse::<Dims>().is_err());
    assert!(generate_synthetic(0, Dims::new(1, 1, 1, 1, 6, 4)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_instances_are_valid_and_reproducible(
        seed in 0u64..10_000,
        i in 0usize..3, j in 1usize..3, k in 0usize..3, s in 1usize..4, per_week in 1usize..4, w in 1usize..6,
    ) {
        let dims = Dims::new(i, j, k, s, per_week * w, w);
        let a = generate_synthetic(seed, dims).unwrap();
        let b = generate_synthetic(seed, dims).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(validate_instance(&a).is_empty());
        let text = write_instance_string(&a);
        prop_assert_eq!(parse_instance_str(&text).unwrap(), a);
    }
}
