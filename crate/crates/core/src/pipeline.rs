//! End-to-end dual-bound workflow: optional weekly aggregation, scenario
//! partition, one relaxation per sub-instance, solve, combine.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulations::{build_model, Formulation, RelaxationConfig};
use crate::instance::Instance;
use crate::mps::write_mps;
use crate::preprocess::tighten_time_windows;
use crate::solver::{
    combine_bounds, external_solve, solve_mip, AdapterConfig, BoundLedger, LedgerEntry, MipLimits, SolveResult,
    SolveStatus,
};
use crate::transforms::{aggregate_time_steps, partition_scenarios, PartitionSpec};

#[derive(Debug, Clone, Default)]
pub enum SolverChoice {
    #[default]
    Internal,
    /// Write each sub-model as MPS and hand it to an external program.
    External { adapter: AdapterConfig, work_dir: PathBuf },
}

#[derive(Debug, Clone)]
pub struct BoundOptions {
    pub relaxation: RelaxationConfig,
    pub aggregate_weeks: bool,
    pub partition: PartitionSpec,
    pub limits: MipLimits,
    /// Concurrent sub-solves; 0 lets rayon decide.
    pub jobs: usize,
    pub solver: SolverChoice,
    /// Reference primal value used for the gap column.
    pub primal: Option<f64>,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            relaxation: RelaxationConfig::default(),
            aggregate_weeks: false,
            partition: PartitionSpec::All,
            limits: MipLimits::default(),
            jobs: 1,
            solver: SolverChoice::Internal,
            primal: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubReport {
    /// 1-based scenario numbers.
    pub scenarios: Vec<usize>,
    pub status: SolveStatus,
    pub dual_bound: f64,
    pub primal: Option<f64>,
    pub nodes: usize,
    pub provenance: String,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub instance: String,
    pub primal_ref: Option<f64>,
    pub dual_bound: f64,
    pub gap_pct: Option<f64>,
    pub formulation: String,
    pub k0: Option<usize>,
    pub scenarios: usize,
    pub aggregated: bool,
    pub ct6: String,
    pub eliminate_stocks: bool,
    pub subproblems: Vec<SubReport>,
    pub ledger: BoundLedger,
    pub elapsed_s: f64,
}

/// `(primal - dual) / primal` in percent.
pub fn gap_pct(primal: f64, dual: f64) -> f64 {
    100.0 * (primal - dual) / primal.abs()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

impl BoundReport {
    /// Tab-separated table: a header, the combined row, then one row per sub-problem.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("instance\tprimal\tdual\tgap_pct\tformulation\tk0\tscenarios\n");
        let k0 = self.k0.map_or_else(|| "-".into(), |k| k.to_string());
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{}\t{}\t{}\t{}",
            self.instance,
            fmt_opt(self.primal_ref),
            self.dual_bound,
            self.gap_pct.map_or_else(|| "-".into(), |g| format!("{g:.4}")),
            self.formulation,
            k0,
            self.scenarios
        );
        for sub in &self.subproblems {
            let scope: Vec<String> = sub.scenarios.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(
                out,
                "{}[{}]\t{}\t{:.6}\t-\t{}\t{}\t{}",
                self.instance,
                scope.join(","),
                fmt_opt(sub.primal),
                sub.dual_bound,
                self.formulation,
                k0,
                sub.scenarios.len()
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Zeroes every wall-clock field, leaving what must be reproducible.
    pub fn without_timing(mut self) -> Self {
        self.elapsed_s = 0.0;
        for s in &mut self.subproblems {
            s.elapsed_s = 0.0;
        }
        self
    }
}

static MPS_COUNTER: AtomicUsize = AtomicUsize::new(0);

fn solve_one(inst: &Instance, opts: &BoundOptions) -> Result<SolveResult> {
    let windows = tighten_time_windows(inst)?;
    let model = build_model(inst, &windows, &opts.relaxation)?;
    match &opts.solver {
        SolverChoice::Internal => Ok(solve_mip(&model, &opts.limits)),
        SolverChoice::External { adapter, work_dir } => {
            let n = MPS_COUNTER.fetch_add(1, Ordering::Relaxed);
            let path = work_dir.join(format!("fbound-{}-{n}.mps", std::process::id()));
            write_mps(&model, &path)?;
            let res = external_solve(&path, adapter);
            let _ = std::fs::remove_file(&path);
            res
        }
    }
}

/// Runs the whole workflow on `inst`. Infeasibility of any sub-problem is
/// returned as `Error::Infeasible`, since it proves the full problem infeasible.
pub fn run_bound(name: &str, inst: &Instance, opts: &BoundOptions) -> Result<BoundReport> {
    let start = Instant::now();
    opts.relaxation.check(inst)?;
    let aggregated;
    let base = if opts.aggregate_weeks {
        aggregated = aggregate_time_steps(inst)?;
        &aggregated
    } else {
        inst
    };
    let part = opts.partition.resolve(base.scenarios.len())?;
    let subs = partition_scenarios(base, &part)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    let results: Vec<Result<SolveResult>> = pool.install(|| {
        subs.par_iter()
            .map(|sub| {
                let t = Instant::now();
                solve_one(sub, opts).map(|mut r| {
                    r.elapsed = t.elapsed();
                    r
                })
            })
            .collect()
    });

    let k0 = (opts.relaxation.formulation == Formulation::V3k).then_some(opts.relaxation.k0);
    let mut entries = Vec::with_capacity(subs.len());
    let mut reports = Vec::with_capacity(subs.len());
    for (scope, res) in part.subsets.iter().zip(results) {
        let r = res?;
        let label: Vec<usize> = scope.iter().map(|s| s + 1).collect();
        match r.status {
            SolveStatus::Infeasible => {
                return Err(Error::Infeasible(format!("sub-problem for scenarios {label:?} is infeasible")))
            }
            SolveStatus::Unbounded => {
                return Err(Error::Model(format!("sub-problem for scenarios {label:?} is unbounded")))
            }
            _ => {}
        }
        entries.push(LedgerEntry {
            scope: scope.clone(),
            weight: 1.0,
            bound: r.dual_bound,
            formulation: opts.relaxation.formulation.to_string(),
            k0,
            provenance: r.provenance.clone(),
        });
        reports.push(SubReport {
            scenarios: label,
            status: r.status,
            dual_bound: r.dual_bound,
            primal: r.primal.is_finite().then_some(r.primal),
            nodes: r.nodes,
            provenance: r.provenance,
            elapsed_s: r.elapsed.as_secs_f64(),
        });
    }
    let ledger = combine_bounds(base.scenarios.len(), entries)?;
    Ok(BoundReport {
        instance: name.to_string(),
        primal_ref: opts.primal,
        dual_bound: ledger.combined,
        gap_pct: opts.primal.map(|p| gap_pct(p, ledger.combined)),
        formulation: opts.relaxation.formulation.to_string(),
        k0,
        scenarios: base.scenarios.len(),
        aggregated: opts.aggregate_weeks,
        ct6: opts.relaxation.ct6.to_string(),
        eliminate_stocks: opts.relaxation.eliminate_stocks,
        subproblems: reports,
        ledger,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Instance name used in reports: the file stem.
pub fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_follows_primal_convention() {
        assert!((gap_pct(200.0, 150.0) - 25.0).abs() < 1e-12);
    }
}
