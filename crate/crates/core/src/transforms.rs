//! Bound-preserving reductions of an instance: weekly time-step aggregation
//! and scenario partitioning.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{ConstraintKind, Instance, Scenario, T1Unit, TimeGrid};

/// First counterexample to the aggregation hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisWitness {
    /// T1 unit `j` has different costs at steps `t` and `t2` of the same week in scenario `s`.
    Cost { t: usize, t2: usize, j: usize, s: usize },
    /// Step durations differ.
    Duration { t: usize, t2: usize },
    /// Fuel consumption factors differ.
    FuelFactor { t: usize, t2: usize },
}

impl fmt::Display for HypothesisWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            HypothesisWitness::Cost { t, t2, j, s } => {
                write!(f, "T1 unit {j} cost differs between steps {t} and {t2} of one week in scenario {}", s + 1)
            }
            HypothesisWitness::Duration { t, t2 } => write!(f, "step duration differs between steps {t} and {t2}"),
            HypothesisWitness::FuelFactor { t, t2 } => write!(f, "fuel factor differs between steps {t} and {t2}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationCertificate {
    pub hypothesis_holds: bool,
    /// The common step duration when it is constant.
    pub duration: Option<f64>,
    pub witness: Option<HypothesisWitness>,
}

/// Checks that T1 costs are constant within each week and that step
/// durations and fuel factors are constant over the horizon. Comparisons are
/// exact.
pub fn check_weekly_cost_hypothesis(inst: &Instance) -> AggregationCertificate {
    let g = &inst.grid;
    let fail = |w: HypothesisWitness, duration| AggregationCertificate { hypothesis_holds: false, duration, witness: Some(w) };
    if let Some(t2) = (1..g.steps()).find(|&t| g.step_duration[t] != g.step_duration[0]) {
        return fail(HypothesisWitness::Duration { t: 0, t2 }, None);
    }
    let duration = g.step_duration.first().copied();
    if let Some(t2) = (1..g.steps()).find(|&t| g.fuel_factor[t] != g.fuel_factor[0]) {
        return fail(HypothesisWitness::FuelFactor { t: 0, t2 }, duration);
    }
    for w in 1..=g.weeks {
        let steps = g.steps_in_week(w);
        let first = steps.start;
        for (j, u) in inst.t1.iter().enumerate() {
            for (s, cost) in u.cost.iter().enumerate() {
                if let Some(t2) = steps.clone().find(|&t| cost[t] != cost[first]) {
                    return fail(HypothesisWitness::Cost { t: first, t2, j, s }, duration);
                }
            }
        }
    }
    AggregationCertificate { hypothesis_holds: true, duration, witness: None }
}

fn weekly_mean(values: &[f64], g: &TimeGrid) -> Vec<f64> {
    (1..=g.weeks)
        .map(|w| {
            let r = g.steps_in_week(w);
            let n = r.len() as f64;
            r.map(|t| values[t]).sum::<f64>() / n
        })
        .collect()
}

fn weekly_sum(values: &[f64], g: &TimeGrid) -> Vec<f64> {
    (1..=g.weeks).map(|w| g.steps_in_week(w).map(|t| values[t]).sum()).collect()
}

/// Replaces the production steps by one step per week.
///
/// Per-step power data is averaged over the week (weight `1/n_w`), durations
/// and fuel factors are summed, so `D̄^w ȳ_w = sum_t D^t y_t` for the averaged
/// production. Refused unless the weekly cost hypothesis holds.
pub fn aggregate_time_steps(inst: &Instance) -> Result<Instance> {
    let cert = check_weekly_cost_hypothesis(inst);
    if let Some(w) = cert.witness {
        return Err(Error::Aggregation(w.to_string()));
    }
    let g = &inst.grid;
    if (1..=g.weeks).any(|w| g.steps_in_week(w).is_empty()) {
        return Err(Error::Aggregation("a week has no production step".into()));
    }
    let grid = TimeGrid {
        step_duration: weekly_sum(&g.step_duration, g),
        fuel_factor: weekly_sum(&g.fuel_factor, g),
        step_to_week: (1..=g.weeks).collect(),
        weeks: g.weeks,
    };
    let per_scenario = |v: &Vec<Vec<f64>>| v.iter().map(|x| weekly_mean(x, g)).collect::<Vec<_>>();
    let t1 = inst
        .t1
        .iter()
        .map(|u| T1Unit {
            name: u.name.clone(),
            cost: per_scenario(&u.cost),
            min_power: per_scenario(&u.min_power),
            max_power: per_scenario(&u.max_power),
        })
        .collect();
    let mut t2 = inst.t2.clone();
    for u in &mut t2 {
        u.max_power = weekly_mean(&u.max_power, g);
    }
    let scenarios = inst
        .scenarios
        .iter()
        .map(|s| Scenario { weight: s.weight, demand: weekly_mean(&s.demand, g) })
        .collect();
    let mut constraints = inst.constraints.clone();
    for c in &mut constraints {
        // The weekly power coefficient becomes the average power.
        if c.kind == ConstraintKind::CT21 {
            for (w, cap) in c.capacity.iter_mut().enumerate() {
                *cap /= g.steps_in_week(w + 1).len() as f64;
            }
        }
    }
    Ok(Instance { grid, t1, t2, scenarios, constraints, first_stage_weight: inst.first_stage_weight })
}

/// Ordered disjoint scenario subsets (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioPartition {
    pub subsets: Vec<Vec<usize>>,
}

/// Partition text: `all`, `singletons`, or 1-based groups like `1,2|3|4,5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionSpec {
    All,
    Singletons,
    Groups(Vec<Vec<usize>>),
}

impl FromStr for PartitionSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => return Ok(PartitionSpec::All),
            "singletons" => return Ok(PartitionSpec::Singletons),
            _ => {}
        }
        let groups = s
            .split('|')
            .map(|g| {
                g.split(',')
                    .map(|x| match x.trim().parse::<usize>() {
                        Ok(n) if n >= 1 => Ok(n - 1),
                        _ => Err(Error::Partition(format!("bad scenario number {x:?} in {s:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PartitionSpec::Groups(groups))
    }
}

impl PartitionSpec {
    pub fn resolve(&self, n_scenarios: usize) -> Result<ScenarioPartition> {
        let subsets = match self {
            PartitionSpec::All => vec![(0..n_scenarios).collect()],
            PartitionSpec::Singletons => (0..n_scenarios).map(|s| vec![s]).collect(),
            PartitionSpec::Groups(g) => g.clone(),
        };
        let p = ScenarioPartition { subsets };
        p.check(n_scenarios)?;
        Ok(p)
    }
}

impl ScenarioPartition {
    pub fn check(&self, n_scenarios: usize) -> Result<()> {
        let mut seen = vec![false; n_scenarios];
        for (n, subset) in self.subsets.iter().enumerate() {
            if subset.is_empty() {
                return Err(Error::Partition(format!("subset {} is empty", n + 1)));
            }
            for &s in subset {
                match seen.get_mut(s) {
                    None => return Err(Error::Partition(format!("scenario {} out of range 1..={n_scenarios}", s + 1))),
                    Some(true) => return Err(Error::Partition(format!("scenario {} appears twice", s + 1))),
                    Some(x) => *x = true,
                }
            }
        }
        if let Some(s) = seen.iter().position(|x| !x) {
            return Err(Error::Partition(format!("scenario {} is not covered", s + 1)));
        }
        Ok(())
    }
}

/// One sub-instance per subset. Weights are kept, and the first-stage cost
/// weight becomes the subset's share, so the sub-optima add up to a bound.
pub fn partition_scenarios(inst: &Instance, part: &ScenarioPartition) -> Result<Vec<Instance>> {
    part.check(inst.scenarios.len())?;
    let total: f64 = inst.scenarios.iter().map(|s| s.weight).sum();
    Ok(part
        .subsets
        .iter()
        .map(|subset| {
            let pick = |v: &Vec<Vec<f64>>| subset.iter().map(|&s| v[s].clone()).collect::<Vec<_>>();
            let share: f64 = subset.iter().map(|&s| inst.scenarios[s].weight).sum();
            Instance {
                grid: inst.grid.clone(),
                t1: inst
                    .t1
                    .iter()
                    .map(|u| T1Unit {
                        name: u.name.clone(),
                        cost: pick(&u.cost),
                        min_power: pick(&u.min_power),
                        max_power: pick(&u.max_power),
                    })
                    .collect(),
                t2: inst.t2.clone(),
                scenarios: subset.iter().map(|&s| inst.scenarios[s].clone()).collect(),
                constraints: inst.constraints.clone(),
                first_stage_weight: inst.first_stage_weight * share / total,
            }
        })
        .collect())
}
