//! Acceptance gate: prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero when any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fbound::chain::check_relaxation_chain;
use fbound::formulations::{add_light_ct6, build_v0, Ct6Mode, Formulation, RelaxationConfig};
use fbound::instance::{parse_instance, parse_instance_str};
use fbound::model::{Model, Tag};
use fbound::oracle::{oracle_optimum, Ct6Oracle, OracleConfig};
use fbound::pipeline::{run_bound, BoundOptions, SolverChoice};
use fbound::preprocess::{stock_elimination_coefficients, tighten_time_windows, TightenedWindows};
use fbound::solver::{solve_mip, AdapterConfig, MipLimits, SolveResult, SolveStatus};
use fbound::transforms::PartitionSpec;
use fbound::{generate_synthetic, Dims, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Outcome = Result<Verdict, String>;

const MICRO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/micro.fbinst");

/// Dimension tuples within `(2,2,2,2,16,4)`.
const CHAIN_DIMS: [(usize, usize, usize, usize, usize, usize); 5] =
    [(1, 1, 1, 1, 8, 4), (1, 1, 1, 2, 8, 4), (2, 1, 1, 2, 8, 4), (1, 2, 2, 2, 8, 4), (2, 2, 2, 2, 16, 4)];

fn dims(seed: u64) -> Dims {
    let d = CHAIN_DIMS[seed as usize % CHAIN_DIMS.len()];
    Dims::new(d.0, d.1, d.2, d.3, d.4, d.5)
}

fn instance(seed: u64) -> Result<Instance, String> {
    generate_synthetic(seed, dims(seed)).map_err(|e| e.to_string())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn leq(a: f64, b: f64, tol: f64) -> bool {
    a <= b || (a - b) <= tol * b.abs().max(1.0)
}

fn exact(m: &Model) -> SolveResult {
    solve_mip(m, &MipLimits::default())
}

/// Optimal value, `+inf` when infeasible.
fn value(r: &SolveResult) -> Result<f64, String> {
    match r.status {
        SolveStatus::Optimal => Ok(r.primal),
        SolveStatus::Infeasible => Ok(f64::INFINITY),
        s => Err(format!("unexpected status {s:?}")),
    }
}

fn relaxation_chain() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for seed in 0..100u64 {
        let inst = instance(seed)?;
        let rep = check_relaxation_chain(&inst).map_err(|e| format!("seed {seed}: {e}"))?;
        if let Some(f) = rep.failures().next() {
            return Ok(Verdict::Fail(format!("seed {seed}: {} ({}): {} > {}", f.property, f.detail, f.lhs, f.rhs)));
        }
        checks += rep.checks.len();
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(600) {
        return Ok(Verdict::Fail(format!("took {elapsed:?}")));
    }
    Ok(Verdict::Pass(format!("100 instances, {checks} inequalities, {:.1}s", elapsed.as_secs_f64())))
}

fn oracle_equivalence() -> Outcome {
    let mut feasible = 0;
    for seed in 0..60u64 {
        let inst = instance(seed)?;
        let oracle = oracle_optimum(&inst, &TightenedWindows::original(&inst), &OracleConfig::default())
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let tw = tighten_time_windows(&inst).map_err(|e| e.to_string())?;
        let mip = value(&exact(&build_v0(&inst, &tw, false).map_err(|e| e.to_string())?))?;
        if !(rel_close(mip, oracle.value, 1e-7) || (mip.is_infinite() && oracle.value.is_infinite())) {
            return Ok(Verdict::Fail(format!("seed {seed}: mip {mip} oracle {}", oracle.value)));
        }
        feasible += usize::from(oracle.is_feasible());
    }
    Ok(Verdict::Pass(format!("60 instances ({feasible} feasible) agree to 1e-7")))
}

fn micro_with(replacements: &[(&str, &str)]) -> Result<Instance, String> {
    let mut text = std::fs::read_to_string(MICRO).map_err(|e| e.to_string())?;
    for (a, b) in replacements {
        text = text.replacen(a, b, 1);
    }
    parse_instance_str(&text).map_err(|e| e.to_string())
}

fn tightening() -> Outcome {
    for seed in 0..50u64 {
        let inst = instance(seed)?;
        let tw = tighten_time_windows(&inst).map_err(|e| e.to_string())?;
        let orig = TightenedWindows::original(&inst);
        let a = value(&exact(&build_v0(&inst, &orig, false).map_err(|e| e.to_string())?))?;
        let b = value(&exact(&build_v0(&inst, &tw, false).map_err(|e| e.to_string())?))?;
        if !(rel_close(a, b, 1e-8) || (a.is_infinite() && b.is_infinite())) {
            return Ok(Verdict::Fail(format!("seed {seed}: {a} before, {b} after")));
        }
    }
    // A large initial stock forces a long first campaign, and the optional outage
    // cannot start before week 4.
    let inst = micro_with(&[("initial_stock = 30.0", "initial_stock = 70.0"), ("latest_start = 3\n", "")])?;
    let before = TightenedWindows::original(&inst).free_binaries(inst.weeks());
    let after = tighten_time_windows(&inst).map_err(|e| e.to_string())?.free_binaries(inst.weeks());
    if after >= before {
        return Ok(Verdict::Fail(format!("constructed instance: {before} binaries before, {after} after")));
    }
    Ok(Verdict::Pass(format!("50 instances unchanged; constructed instance {before} -> {after} binaries")))
}

fn stock_elimination() -> Outcome {
    for seed in 0..50u64 {
        let inst = instance(seed)?;
        let tw = tighten_time_windows(&inst).map_err(|e| e.to_string())?;
        let a = value(&exact(&build_v0(&inst, &tw, false).map_err(|e| e.to_string())?))?;
        let b = value(&exact(&build_v0(&inst, &tw, true).map_err(|e| e.to_string())?))?;
        if !(rel_close(a, b, 1e-8) || (a.is_infinite() && b.is_infinite())) {
            return Ok(Verdict::Fail(format!("seed {seed}: {a} with stocks, {b} eliminated")));
        }
    }
    // Closed form against a forward simulation of the refuel law.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let inst = generate_synthetic(seed, Dims::new(2, 1, 4, 1, 4, 4)).map_err(|e| e.to_string())?;
        for (i, u) in inst.t2.iter().enumerate() {
            let plan = stock_elimination_coefficients(&inst, i);
            let n = u.cycles.len();
            let r: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { rng.gen_range(0.0..40.0) }).collect();
            let burn: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..30.0)).collect();
            let mut init = u.initial_stock;
            for k in 0..n {
                if k > 0 {
                    let (prev, c) = (&u.cycles[k - 1], &u.cycles[k]);
                    let fin_prev = init - burn[k - 1];
                    init = r[k] + (c.retention - 1.0) / c.retention * (fin_prev - prev.threshold) + c.threshold;
                }
                worst = worst.max((plan.init[k].eval(&r, &burn) - init).abs() / init.abs().max(1.0));
                worst = worst.max((plan.fin[k].eval(&r, &burn) - (init - burn[k])).abs() / init.abs().max(1.0));
            }
        }
    }
    if worst > 1e-9 {
        return Ok(Verdict::Fail(format!("closed form off by {worst:e}")));
    }
    Ok(Verdict::Pass(format!("50 instances equal; closed form within {worst:.1e} of simulation")))
}

fn light_ct6_sandwich() -> Outcome {
    let mut strict = 0;
    let check = |inst: &Instance| -> Result<(f64, f64, f64), String> {
        let tw = tighten_time_windows(inst).map_err(|e| e.to_string())?;
        let v0m = build_v0(inst, &tw, false).map_err(|e| e.to_string())?;
        let mut lm = v0m.clone();
        add_light_ct6(&mut lm, inst, &tw, Ct6Mode::PerCycle).map_err(|e| e.to_string())?;
        let cfg = OracleConfig { ct6: Ct6Oracle::Exact, ..Default::default() };
        let ex = oracle_optimum(inst, &TightenedWindows::original(inst), &cfg).map_err(|e| e.to_string())?;
        Ok((value(&exact(&v0m))?, value(&exact(&lm))?, ex.value))
    };
    for seed in 0..50u64 {
        let d = if seed % 2 == 0 { Dims::new(1, 1, 1, 1, 8, 4) } else { Dims::new(1, 1, 1, 2, 8, 4) };
        let inst = generate_synthetic(seed, d).map_err(|e| e.to_string())?;
        let (v0, light, ex) = check(&inst)?;
        if !(leq(v0, light, 1e-8) && leq(light, ex, 1e-8)) {
            return Ok(Verdict::Fail(format!("seed {seed}: v0 {v0} light {light} exact {ex}")));
        }
        strict += usize::from(light - v0 > 1e-6 * v0.abs());
    }
    // On the golden micro-instance the stretch cap binds during the first campaign.
    let inst = micro_with(&[])?;
    let (v0, light, ex) = check(&inst)?;
    if !(leq(v0, light, 1e-8) && leq(light, ex, 1e-8)) || light - v0 <= 1e-6 * v0.abs() {
        return Ok(Verdict::Fail(format!("micro instance: v0 {v0} light {light} exact {ex}")));
    }
    Ok(Verdict::Pass(format!(
        "50 instances sandwiched ({strict} strict); micro instance v0 {v0:.3} < light {light:.3} <= exact {ex:.3}"
    )))
}

fn truncation() -> Outcome {
    let mut improved = 0;
    for seed in 0..30u64 {
        let inst = instance(seed)?;
        let tw = tighten_time_windows(&inst).map_err(|e| e.to_string())?;
        let m = build_v0(&inst, &tw, false).map_err(|e| e.to_string())?;
        let oracle = oracle_optimum(&inst, &TightenedWindows::original(&inst), &OracleConfig::default())
            .map_err(|e| e.to_string())?;
        let mut prev = f64::NEG_INFINITY;
        let mut bounds = Vec::new();
        for limit in [Some(1), Some(2), Some(5), None] {
            let r = solve_mip(&m, &MipLimits { node_limit: limit, time_limit: None });
            let b = r.dual_bound;
            if !leq(prev, b, 1e-9) || !leq(b, oracle.value, 1e-8) {
                return Ok(Verdict::Fail(format!("seed {seed}: bounds {bounds:?} then {b}, oracle {}", oracle.value)));
            }
            bounds.push(b);
            prev = b;
        }
        improved += usize::from(bounds[3] - bounds[0] > 1e-6 * bounds[3].abs().max(1.0) && bounds[3].is_finite());
    }
    Ok(Verdict::Pass(format!("30 instances, limits 1/2/5/inf monotone and below the oracle ({improved} with root gap)")))
}

fn constraint_counts() -> Outcome {
    let mut lines = Vec::new();
    for d in [Dims::new(1, 1, 1, 1, 8, 4), Dims::new(2, 1, 2, 2, 8, 4), Dims::new(2, 2, 3, 1, 12, 4)] {
        let inst = generate_synthetic(3, d).map_err(|e| e.to_string())?;
        let tw = tighten_time_windows(&inst).map_err(|e| e.to_string())?;
        let base = build_v0(&inst, &tw, false).map_err(|e| e.to_string())?;
        let (i, s, t) = (inst.t2.len(), inst.scenarios.len(), inst.steps());
        let k = inst.t2[0].cycles.len();
        let m = inst.t2[0].cycles[0].profile.len() - 1;
        for (mode, expected) in [(Ct6Mode::PerCycle, i * s * t * (m + 1) * k), (Ct6Mode::Shared, i * s * t * (k + m))] {
            let mut lm = base.clone();
            add_light_ct6(&mut lm, &inst, &tw, mode).map_err(|e| e.to_string())?;
            let added = lm.constraints.len() - base.constraints.len();
            let tagged = lm.count_tag(Tag::defVarStretch) + lm.count_tag(Tag::ctStretch1) + lm.count_tag(Tag::ctStretch2);
            if added != expected || tagged != expected {
                return Ok(Verdict::Fail(format!("{d} {mode}: {added} rows added, expected {expected}")));
            }
            lines.push(format!("{d} {mode}: {added}"));
        }
    }
    Ok(Verdict::Pass(lines.join("; ")))
}

/// Challenge instance A1 in canonical form plus an adapter config, given
/// through `FBOUND_A1_INSTANCE` and `FBOUND_SOLVER_CONFIG`.
fn challenge_a1() -> Outcome {
    let (Some(inst_path), Some(cfg_path)) =
        (std::env::var_os("FBOUND_A1_INSTANCE"), std::env::var_os("FBOUND_SOLVER_CONFIG"))
    else {
        return Ok(Verdict::Skip("FBOUND_A1_INSTANCE and FBOUND_SOLVER_CONFIG not set".into()));
    };
    let inst = parse_instance(PathBuf::from(inst_path)).map_err(|e| e.to_string())?;
    let adapter = AdapterConfig::load(PathBuf::from(cfg_path)).map_err(|e| e.to_string())?;
    let opts = BoundOptions {
        solver: SolverChoice::External { adapter, work_dir: std::env::temp_dir() },
        ..Default::default()
    };
    let rep = run_bound("A1", &inst, &opts).map_err(|e| e.to_string())?;
    let (upper, reported) = (169_474.5e6, 169_403e6);
    let b = rep.dual_bound;
    if b <= upper && b >= 0.99 * reported {
        Ok(Verdict::Pass(format!("v0 dual bound {b:.1}")))
    } else {
        Ok(Verdict::Fail(format!("v0 dual bound {b:.1} outside [{:.1}, {upper:.1}]", 0.99 * reported)))
    }
}

fn determinism() -> Outcome {
    let inst = generate_synthetic(1, Dims::new(2, 2, 2, 2, 16, 4)).map_err(|e| e.to_string())?;
    let opts = BoundOptions {
        relaxation: RelaxationConfig { formulation: Formulation::V3k, k0: 1, ..Default::default() },
        partition: PartitionSpec::Singletons,
        jobs: 2,
        primal: Some(50_000.0),
        ..Default::default()
    };
    let run = || -> Result<(String, String), String> {
        let r = run_bound("g1", &inst, &opts).map_err(|e| e.to_string())?.without_timing();
        Ok((r.to_tsv(), r.to_json()))
    };
    let (a, b) = (run()?, run()?);
    if a != b {
        return Ok(Verdict::Fail("reports differ between runs".into()));
    }
    Ok(Verdict::Pass(format!("identical {}-byte reports", a.0.len() + a.1.len())))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("relaxation chain on 100 micro-instances", relaxation_chain),
        ("v0 MIP equals schedule enumeration", oracle_equivalence),
        ("window tightening preserves the optimum", tightening),
        ("stock elimination preserves the optimum", stock_elimination),
        ("light stretch rows sandwiched by the exact profile", light_ct6_sandwich),
        ("truncated branch-and-bound bounds", truncation),
        ("light stretch row counts", constraint_counts),
        ("challenge instance A1 with an external solver", challenge_a1),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = false;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(Verdict::Pass(d)) => ("PASS", d),
            Ok(Verdict::Skip(d)) => ("SKIP", d),
            Ok(Verdict::Fail(d)) => ("FAIL", d),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        failed |= tag == "FAIL";
        println!("criterion {}: {tag} {name}: {detail}", n + 1);
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
