//! Machine check of the proved orderings between relaxations on one
//! micro-instance.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulations::{build_model, RelaxationConfig};
use crate::instance::Instance;
use crate::preprocess::tighten_time_windows;
use crate::solver::{solve_mip, MipLimits, SolveStatus};
use crate::transforms::{aggregate_time_steps, check_weekly_cost_hypothesis, partition_scenarios, ScenarioPartition};

/// Absolute slack after scaling by `max(1, |rhs|)`.
pub const CHAIN_TOL: f64 = 1e-8;

/// Partitions are enumerated exhaustively up to this many scenarios.
pub const MAX_ENUMERATED_SCENARIOS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// v3 <= v0.
    V3BelowV0,
    /// v3(k0) <= v0 for every k0.
    V3kBelowV0,
    /// Weekly-aggregated v0 <= v0.
    AggregationBelowV0,
    /// Weighted deterministic optima <= stochastic optimum.
    ScenarioDecomposition,
    /// Singleton bound <= partition bound <= stochastic optimum, and refining a
    /// partition never raises its bound.
    PartitionChain,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::V3BelowV0 => "v3 <= v0",
            Property::V3kBelowV0 => "v3(k0) <= v0",
            Property::AggregationBelowV0 => "weekly aggregation <= v0",
            Property::ScenarioDecomposition => "scenario decomposition <= v0",
            Property::PartitionChain => "partition chain",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainCheck {
    pub property: Property,
    pub detail: String,
    pub lhs: f64,
    pub rhs: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ChainReport {
    pub checks: Vec<ChainCheck>,
}

/// `lhs <= rhs` up to the chain tolerance; infinities compare as usual.
pub fn leq(lhs: f64, rhs: f64) -> bool {
    if lhs <= rhs {
        return true;
    }
    rhs.is_finite() && lhs - rhs <= CHAIN_TOL * rhs.abs().max(1.0)
}

impl ChainReport {
    fn push(&mut self, property: Property, detail: impl Into<String>, lhs: f64, rhs: f64) {
        let outcome = if leq(lhs, rhs) { Outcome::Pass } else { Outcome::Fail };
        self.checks.push(ChainCheck { property, detail: detail.into(), lhs, rhs, outcome });
    }

    fn skip(&mut self, property: Property, detail: impl Into<String>) {
        self.checks.push(ChainCheck { property, detail: detail.into(), lhs: f64::NAN, rhs: f64::NAN, outcome: Outcome::Skipped });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ChainCheck> {
        self.checks.iter().filter(|c| c.outcome == Outcome::Fail)
    }

    /// One outcome per property: failed if any check failed, skipped if all were skipped.
    pub fn summary(&self) -> BTreeMap<Property, Outcome> {
        let mut out = BTreeMap::new();
        for c in &self.checks {
            let e = out.entry(c.property).or_insert(Outcome::Skipped);
            *e = match (*e, c.outcome) {
                (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
                (Outcome::Pass, _) | (_, Outcome::Pass) => Outcome::Pass,
                _ => Outcome::Skipped,
            };
        }
        out
    }
}

/// Exact optimum of a relaxation; `+inf` when infeasible.
pub fn exact_value(inst: &Instance, cfg: &RelaxationConfig) -> Result<f64> {
    let windows = tighten_time_windows(inst)?;
    let m = build_model(inst, &windows, cfg)?;
    let r = solve_mip(&m, &MipLimits::default());
    match r.status {
        SolveStatus::Optimal => Ok(r.primal),
        SolveStatus::Infeasible => Ok(f64::INFINITY),
        SolveStatus::Unbounded => Ok(f64::NEG_INFINITY),
        SolveStatus::LimitReached => Err(Error::Model("exact solve hit a limit".into())),
    }
}

/// Every set partition of `0..n` in restricted-growth order.
pub fn set_partitions(n: usize) -> Vec<ScenarioPartition> {
    fn rec(i: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<ScenarioPartition>) {
        if i == n {
            out.push(ScenarioPartition { subsets: cur.clone() });
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            rec(i + 1, n, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(0, n, &mut Vec::new(), &mut out);
    }
    out
}

fn refines(fine: &ScenarioPartition, coarse: &ScenarioPartition) -> bool {
    fine.subsets.iter().all(|f| coarse.subsets.iter().any(|c| f.iter().all(|s| c.contains(s))))
}

fn label(subset: &[usize]) -> String {
    subset.iter().map(|s| (s + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn partition_label(p: &ScenarioPartition) -> String {
    p.subsets.iter().map(|s| label(s)).collect::<Vec<_>>().join("|")
}

/// Solves v0, v3, every v3(k0), aggregated v0 and the scenario sub-problems,
/// and checks each proved inequality.
pub fn check_relaxation_chain(inst: &Instance) -> Result<ChainReport> {
    let mut rep = ChainReport::default();
    let v0 = exact_value(inst, &RelaxationConfig::v0())?;

    rep.push(Property::V3BelowV0, "v3 vs v0", exact_value(inst, &RelaxationConfig::v3())?, v0);
    let kmax = inst.t2.iter().map(|u| u.last_cycle()).max().unwrap_or(0);
    for k0 in 0..=kmax {
        rep.push(Property::V3kBelowV0, format!("k0 = {k0}"), exact_value(inst, &RelaxationConfig::v3k(k0))?, v0);
    }

    let cert = check_weekly_cost_hypothesis(inst);
    match cert.witness {
        None => {
            let agg = aggregate_time_steps(inst)?;
            rep.push(Property::AggregationBelowV0, "aggregated v0 vs v0", exact_value(&agg, &RelaxationConfig::v0())?, v0);
        }
        Some(w) => rep.skip(Property::AggregationBelowV0, format!("hypothesis fails: {w}")),
    }

    // Optimum of every sub-problem that some partition needs.
    let n = inst.scenarios.len();
    let partitions = if n <= MAX_ENUMERATED_SCENARIOS {
        set_partitions(n)
    } else {
        vec![
            ScenarioPartition { subsets: (0..n).map(|s| vec![s]).collect() },
            ScenarioPartition { subsets: vec![(0..n).collect()] },
        ]
    };
    let mut sub_value: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    sub_value.insert((0..n).collect(), v0);
    for p in &partitions {
        for (subset, sub) in p.subsets.iter().zip(partition_scenarios(inst, p)?) {
            if !sub_value.contains_key(subset) {
                sub_value.insert(subset.clone(), exact_value(&sub, &RelaxationConfig::v0())?);
            }
        }
    }
    let bound = |p: &ScenarioPartition| p.subsets.iter().map(|s| sub_value[s]).sum::<f64>();
    let singletons = ScenarioPartition { subsets: (0..n).map(|s| vec![s]).collect() };
    let det = bound(&singletons);
    rep.push(Property::ScenarioDecomposition, "sum of weighted deterministic optima", det, v0);
    for p in &partitions {
        let b = bound(p);
        let name = partition_label(p);
        rep.push(Property::PartitionChain, format!("singletons <= {name}"), det, b);
        rep.push(Property::PartitionChain, format!("{name} <= full"), b, v0);
    }
    for fine in &partitions {
        for coarse in &partitions {
            if fine != coarse && refines(fine, coarse) {
                let detail = format!("{} <= {}", partition_label(fine), partition_label(coarse));
                rep.push(Property::PartitionChain, detail, bound(fine), bound(coarse));
            }
        }
    }
    Ok(rep)
}
