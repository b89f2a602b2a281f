//! Small hand-checkable cases for each module.

use fbound::formulations::{build, build_v0, RelaxationConfig};
use fbound::instance::{parse_instance_str, validate_instance};
use fbound::model::{LinExpr, Model, Sense, Tag};
use fbound::mps::mps_string;
use fbound::oracle::schedule_satisfies;
use fbound::pipeline::{run_bound, BoundOptions};
use fbound::preprocess::{tighten_time_windows, TightenedWindows};
use fbound::solver::{solve_mip, MipLimits, SolveStatus};
use fbound::transforms::{check_weekly_cost_hypothesis, PartitionSpec};
use fbound::{generate_synthetic, ConstraintKind, Dims, Error, Instance, OutageRef, ScheduleConstraint, TimeGrid};

const MICRO: &str = include_str!("data/micro.fbinst");

fn micro(edit: impl Fn(String) -> String) -> std::result::Result<Instance, Error> {
    parse_instance_str(&edit(MICRO.to_string()))
}

fn violations_at(inst: &Instance, loc: &str) -> usize {
    validate_instance(inst).iter().filter(|v| v.location == loc).count()
}

#[test]
fn weights_must_sum_to_one() {
    let err = micro(|t| t.replacen("[[scenarios]]\n", "[[scenarios]]\nweight = 0.9\n", 1)).unwrap_err();
    assert!(err.to_string().contains("scenario weights do not sum to 1"), "{err}");
}

#[test]
fn refuel_bounds_and_concavity_name_their_location() {
    let mut inst = micro(|t| t).unwrap();
    inst.t2[0].cycles[1].refuel_min = 40.0;
    assert_eq!(violations_at(&inst, "t2[0].cycles[1]"), 1);
    let mut inst = micro(|t| t).unwrap();
    inst.t2[0].cycles[1].profile = vec![(10.0, 1.0), (5.0, 0.2), (0.0, 0.0)];
    assert_eq!(violations_at(&inst, "t2[0].cycles[1].profile[2]"), 1);
}

#[test]
fn generator_is_seeded() {
    let d = Dims::new(2, 2, 2, 2, 16, 4);
    let a = generate_synthetic(1, d).unwrap();
    assert_eq!(a, generate_synthetic(1, d).unwrap());
    assert_eq!(a.t2.len(), 2);
    assert_ne!(a.scenarios[0].demand, generate_synthetic(2, d).unwrap().scenarios[0].demand);
    let m = generate_synthetic(5, Dims::new(1, 1, 1, 1, 4, 4)).unwrap();
    assert_eq!((m.t2[0].cycles.len(), m.scenarios.len(), m.steps()), (2, 1, 4));
}

#[test]
fn consistent_windows_are_a_fixed_point() {
    let inst = micro(|t| t).unwrap();
    let tw = tighten_time_windows(&inst).unwrap();
    let orig = TightenedWindows::original(&inst);
    assert_eq!((tw.earliest, tw.latest, tw.removed), (orig.earliest, orig.latest, orig.removed));
}

#[test]
fn stretch_cap_interpolates_the_segment() {
    let mut c = micro(|t| t).unwrap().t2[0].cycles[0].clone();
    c.profile = vec![(10.0, 1.0), (0.0, 0.0)];
    assert_eq!(c.stretch_cap(5.0), 0.5);
    assert!(c.stretch_cap(12.0) >= 1.0);
}

#[test]
fn micro_row_counts() {
    let inst = micro(|t| t).unwrap();
    let m = build(&inst, &RelaxationConfig::v0()).unwrap();
    assert_eq!(m.count_tag(Tag::PANdemand), inst.scenarios.len() * inst.steps());
    assert_eq!(m.count_tag(Tag::PANrefuel), 0, "a mandatory outage gets plain refuel bounds");
    assert_eq!(m.num_binaries(), 1);
}

fn ct_instance(kind: ConstraintKind, spacing: i64, capacity: Vec<f64>) -> Instance {
    let mut inst = generate_synthetic(2, Dims::new(2, 1, 1, 1, 6, 6)).unwrap();
    inst.constraints = vec![ScheduleConstraint {
        kind,
        outages: vec![OutageRef(0, 1), OutageRef(1, 1)],
        spacing,
        window: None,
        resource_offset: vec![],
        resource_length: vec![],
        capacity,
    }];
    inst
}

#[test]
fn ct16_spacing_is_evaluated_directly() {
    let inst = ct_instance(ConstraintKind::CT16, 2, vec![]);
    let sched = |a, b| vec![vec![Some(inst.t2[0].initial_start_week()), Some(a)], vec![Some(inst.t2[1].initial_start_week()), Some(b)]];
    assert!(!schedule_satisfies(&inst, &sched(3, 4)));
    assert!(schedule_satisfies(&inst, &sched(3, 5)));
}

#[test]
fn ct20_with_forced_overlap_is_infeasible() {
    let mut inst = ct_instance(ConstraintKind::CT20, 0, vec![1.0; 6]);
    for u in &mut inst.t2 {
        u.cycles[1].earliest_start = 3;
        u.cycles[1].latest_start = Some(3);
    }
    let m = build(&inst, &RelaxationConfig::v0()).unwrap();
    assert_eq!(solve_mip(&m, &MipLimits::default()).status, SolveStatus::Infeasible);
}

#[test]
fn v3k_at_zero_has_no_weekly_binaries_after_cycle_zero() {
    let inst = generate_synthetic(1, Dims::new(2, 2, 2, 2, 16, 4)).unwrap();
    let m = build(&inst, &RelaxationConfig::v3k(0)).unwrap();
    assert!(m.variables.iter().all(|v| !v.name.starts_with("d[") || v.name.matches(',').count() == 1));
    let low = solve_mip(&m, &MipLimits::default()).primal;
    let high = solve_mip(&build(&inst, &RelaxationConfig::v3k(2)).unwrap(), &MipLimits::default()).primal;
    assert!(low <= high + 1e-9);
}

#[test]
fn daily_steps_with_varying_costs_fail_the_hypothesis() {
    let mut inst = generate_synthetic(3, Dims::new(1, 2, 1, 1, 28, 4)).unwrap();
    inst.grid = TimeGrid::uniform(4, 7, 24.0);
    for (t, c) in inst.t1[0].cost[0].iter_mut().enumerate() {
        *c += (t % 7) as f64;
    }
    let cert = check_weekly_cost_hypothesis(&inst);
    assert!(!cert.hypothesis_holds);
    assert!(cert.witness.is_some());
}

#[test]
fn singleton_partition_of_one_scenario_is_the_plain_solve() {
    let inst = micro(|t| t).unwrap();
    let opts = BoundOptions { partition: PartitionSpec::Singletons, ..Default::default() };
    let a = run_bound("m", &inst, &opts).unwrap();
    let b = solve_mip(&build_v0(&inst, &tighten_time_windows(&inst).unwrap(), false).unwrap(), &MipLimits::default());
    assert_eq!(a.dual_bound, b.primal);
}

#[test]
fn tiny_model_mps() {
    let mut m = Model::new("tiny");
    let x = m.continuous("x", 0.0, f64::INFINITY).unwrap();
    m.add_constraint(LinExpr::var(x), Sense::Ge, 3.0, Tag::PANdemand).unwrap();
    m.set_objective(LinExpr::var(x)).unwrap();
    let expected = "\
NAME          tiny
ROWS
 N  COST
 G  R0
COLUMNS
    x         COST                 1
    x         R0                   1
RHS
    RHS       R0                   3
BOUNDS
ENDATA
";
    assert_eq!(mps_string(&m), expected);
    assert_eq!(solve_mip(&m, &MipLimits::default()).primal, 3.0);
}

#[test]
fn fingerprint_sees_small_coefficient_changes() {
    let inst = micro(|t| t).unwrap();
    let m = build(&inst, &RelaxationConfig::v0()).unwrap();
    let mut p = m.clone();
    p.constraints[0].expr.terms[0].1 += 1e-3;
    assert_ne!(m.fingerprint(), p.fingerprint());
}
