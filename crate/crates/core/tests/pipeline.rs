use fbound::formulations::{build, RelaxationConfig};
use fbound::oracle::{oracle_optimum, OracleConfig};
use fbound::pipeline::{run_bound, BoundOptions};
use fbound::preprocess::TightenedWindows;
use fbound::solver::{combine_bounds, solve_mip, LedgerEntry, MipLimits};
use fbound::transforms::{partition_scenarios, PartitionSpec};
use fbound::{generate_synthetic, Dims, Error};

#[test]
fn whole_partition_is_the_original_problem() {
    let inst = generate_synthetic(4, Dims::new(2, 1, 1, 3, 8, 4)).unwrap();
    let rep = run_bound("g", &inst, &BoundOptions::default()).unwrap();
    let direct = solve_mip(&build(&inst, &RelaxationConfig::v0()).unwrap(), &MipLimits::default());
    assert_eq!(rep.dual_bound, direct.primal);
    assert_eq!(rep.subproblems.len(), 1);
    assert_eq!(rep.scenarios, 3);
}

#[test]
fn mixed_formulations_still_bound_the_stochastic_optimum() {
    for seed in 0..6u64 {
        let inst = generate_synthetic(seed, Dims::new(1, 1, 2, 2, 8, 4)).unwrap();
        let part = PartitionSpec::Singletons.resolve(2).unwrap();
        let subs = partition_scenarios(&inst, &part).unwrap();
        let cfgs = [RelaxationConfig::v0(), RelaxationConfig::v3k(1)];
        let entries = subs
            .iter()
            .zip(cfgs)
            .enumerate()
            .map(|(s, (sub, cfg))| LedgerEntry {
                scope: vec![s],
                weight: 1.0,
                bound: solve_mip(&build(sub, &cfg).unwrap(), &MipLimits::default()).dual_bound,
                formulation: cfg.formulation.to_string(),
                k0: Some(cfg.k0),
                provenance: "internal".into(),
            })
            .collect();
        let ledger = combine_bounds(2, entries).unwrap();
        let oracle = oracle_optimum(&inst, &TightenedWindows::original(&inst), &OracleConfig::default()).unwrap();
        assert!(ledger.combined <= oracle.value + 1e-8 * oracle.value.abs(), "seed {seed}");
    }
}

#[test]
fn job_count_does_not_change_the_report() {
    let inst = generate_synthetic(9, Dims::new(1, 2, 1, 4, 8, 4)).unwrap();
    let run = |jobs| {
        let opts = BoundOptions { partition: "1,3|2|4".parse().unwrap(), jobs, ..Default::default() };
        run_bound("g", &inst, &opts).unwrap().without_timing().to_json()
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn node_limited_bound_is_below_the_exact_one() {
    let inst = generate_synthetic(3, Dims::new(2, 2, 2, 2, 16, 4)).unwrap();
    let exact = run_bound("g", &inst, &BoundOptions::default()).unwrap();
    let opts = BoundOptions { limits: MipLimits { node_limit: Some(1), time_limit: None }, ..Default::default() };
    let root = run_bound("g", &inst, &opts).unwrap();
    assert!(root.dual_bound <= exact.dual_bound + 1e-9);
}

#[test]
fn bad_partition_is_refused() {
    let inst = generate_synthetic(1, Dims::new(1, 1, 1, 3, 4, 4)).unwrap();
    let opts = BoundOptions { partition: "1|2".parse().unwrap(), ..Default::default() };
    assert!(matches!(run_bound("g", &inst, &opts), Err(Error::Partition(_))));
}

/// Runs only when `FBOUND_SOLVER_CONFIG` names an adapter for a real solver.
#[test]
fn external_solver_agrees_with_the_internal_one() {
    let Some(cfg) = std::env::var_os("FBOUND_SOLVER_CONFIG") else { return };
    let adapter = fbound::solver::AdapterConfig::load(cfg).unwrap();
    let inst = generate_synthetic(2, Dims::new(1, 1, 1, 1, 8, 4)).unwrap();
    let internal = run_bound("g", &inst, &BoundOptions::default()).unwrap();
    let solver = fbound::pipeline::SolverChoice::External { adapter, work_dir: std::env::temp_dir() };
    let external = run_bound("g", &inst, &BoundOptions { solver, ..Default::default() }).unwrap();
    let (a, b) = (internal.dual_bound, external.dual_bound);
    assert!((a - b).abs() <= 1e-6 * a.abs(), "internal {a} external {b}");
}
