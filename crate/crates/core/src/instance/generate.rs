use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    ConstraintKind, CycleSpec, Instance, OutageRef, Scenario, ScheduleConstraint, T1Unit, T2Unit, TimeGrid,
};
use crate::error::{Error, Result};

/// Instance cardinalities `(I, J, K, S, T, W)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub units: usize,
    pub flex_units: usize,
    pub cycles: usize,
    pub scenarios: usize,
    pub steps: usize,
    pub weeks: usize,
}

impl Dims {
    pub fn new(units: usize, flex_units: usize, cycles: usize, scenarios: usize, steps: usize, weeks: usize) -> Self {
        Self { units, flex_units, cycles, scenarios, steps, weeks }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{},{},{}", self.units, self.flex_units, self.cycles, self.scenarios, self.steps, self.weeks)
    }
}

impl FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<usize> = s
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Dimensions(format!("`{s}`: {e}")))?;
        match v[..] {
            [i, j, k, sc, t, w] => Ok(Dims::new(i, j, k, sc, t, w)),
            _ => Err(Error::Dimensions(format!("`{s}`: expected I,J,K,S,T,W"))),
        }
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Deterministic synthetic instance for desk-scale experiments.
///
/// Weeks are homogeneous and T1 costs are constant within each week, so weekly
/// aggregation is always admissible. Stocks satisfy `Amax <= Bo`, which keeps
/// the campaign-length bound of the time-window tightening valid, and the
/// retention factors are high enough that cycles left unprocessed never
/// violate the stock bounds.
pub fn generate_synthetic(seed: u64, dims: Dims) -> Result<Instance> {
    let Dims { units, flex_units, cycles, scenarios, steps, weeks } = dims;
    if flex_units == 0 || scenarios == 0 || steps == 0 || weeks == 0 {
        return Err(Error::Dimensions(format!("{dims}: J, S, T and W must be positive")));
    }
    if weeks > steps {
        return Err(Error::Dimensions(format!("{dims}: more weeks than steps")));
    }
    if steps % weeks != 0 {
        return Err(Error::Dimensions(format!("{dims}: T must be a multiple of W")));
    }
    let per_week = steps / weeks;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::uniform(weeks, per_week, round3(4.0 / per_week as f64));

    let mut t1 = Vec::with_capacity(flex_units);
    for j in 0..flex_units {
        let base_cost = rng.gen_range(20.0..60.0);
        let pmin = round3(rng.gen_range(0.0..5.0));
        let pmax = rng.gen_range(60.0..80.0);
        let mut cost = vec![vec![0.0; steps]; scenarios];
        let mut min_power = vec![vec![0.0; steps]; scenarios];
        let mut max_power = vec![vec![0.0; steps]; scenarios];
        for s in 0..scenarios {
            let scale = rng.gen_range(0.9..1.1);
            for w in 1..=weeks {
                let c = round3(base_cost * rng.gen_range(0.85..1.15));
                for t in grid.steps_in_week(w) {
                    cost[s][t] = c;
                    min_power[s][t] = pmin;
                    max_power[s][t] = round3(pmax * scale);
                }
            }
        }
        t1.push(T1Unit { name: format!("flex{j}"), cost, min_power, max_power });
    }

    let mut t2 = Vec::with_capacity(units);
    for i in 0..units {
        let power = rng.gen_range(8.0..15.0);
        let max_power: Vec<f64> =
            (0..steps).map(|t| round3(power * (1.0 + 0.05 * ((t / per_week) % 2) as f64))).collect();
        let thresholds: Vec<f64> = (0..=cycles).map(|_| round3(rng.gen_range(8.0..15.0))).collect();
        let low = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
        let knee = round3(rng.gen_range(0.55..0.9));
        let profile = vec![(low, 1.0), (round3(low / 2.0), knee), (0.0, 0.0)];

        let mut specs = Vec::with_capacity(cycles + 1);
        let initial_outage = rng.gen_range(0..=1i64);
        let start0 = if rng.gen_bool(0.5) { 1 - initial_outage } else { 1 };
        let campaign0 = start0 + initial_outage;
        let mut earliest = 0i64;
        for (k, &bo) in thresholds.iter().enumerate() {
            let refuel_min = round3(rng.gen_range(15.0..30.0));
            let (outage_weeks, earliest_start, latest_start) = if k == 0 {
                (initial_outage, start0, Some(start0))
            } else {
                earliest = if k == 1 {
                    rng.gen_range(2..=3.min(weeks as i64).max(2))
                } else {
                    earliest + 1 + rng.gen_range(0..=1)
                };
                let latest = if k == 1 && rng.gen_bool(0.5) {
                    let ta = (earliest + rng.gen_range(0..=2)).min(weeks as i64).max(campaign0 + 1);
                    (ta >= earliest && ta <= weeks as i64).then_some(ta)
                } else {
                    None
                };
                (1, earliest, latest)
            };
            specs.push(CycleSpec {
                outage_weeks,
                earliest_start,
                latest_start,
                refuel_min,
                refuel_max: round3(refuel_min + rng.gen_range(5.0..20.0)),
                max_stock: 60.0,
                max_residual: round3(rng.gen_range(5.0..bo)),
                threshold: bo,
                retention: round3(rng.gen_range(0.9..0.95)),
                refuel_cost: round3(rng.gen_range(4.0..8.0)),
                profile: profile.clone(),
            });
        }
        let amax0 = specs[0].max_residual;
        specs[0].refuel_min = 0.0;
        specs[0].refuel_max = 0.0;
        specs[0].refuel_cost = 0.0;
        t2.push(T2Unit {
            name: format!("nuc{i}"),
            initial_stock: round3(amax0 + rng.gen_range(0.0..25.0)),
            final_stock_value: round3(rng.gen_range(2.0..6.0)),
            max_power,
            cycles: specs,
        });
    }

    let pmin_sum: Vec<Vec<f64>> =
        (0..scenarios).map(|s| (0..steps).map(|t| t1.iter().map(|u| u.min_power[s][t]).sum()).collect()).collect();
    let pmax_sum: Vec<Vec<f64>> =
        (0..scenarios).map(|s| (0..steps).map(|t| t1.iter().map(|u| u.max_power[s][t]).sum()).collect()).collect();
    let weight = 1.0 / scenarios as f64;
    let scenario_list = (0..scenarios)
        .map(|s| Scenario {
            weight,
            demand: (0..steps)
                .map(|t| {
                    let lo = pmin_sum[s][t] + 15.0;
                    let hi = pmax_sum[s][t] - 5.0;
                    round3(lo + rng.gen_range(0.2..0.8) * (hi - lo))
                })
                .collect(),
        })
        .collect();

    let mut constraints = Vec::new();
    if units >= 2 && cycles >= 1 {
        let members = vec![OutageRef(0, 1), OutageRef(1, 1)];
        let base = ScheduleConstraint {
            kind: ConstraintKind::CT14,
            outages: members.clone(),
            spacing: 0,
            window: None,
            resource_offset: vec![],
            resource_length: vec![],
            capacity: vec![],
        };
        let pick = rng.gen_range(0..9);
        let c = match pick {
            0 => Some(ScheduleConstraint { spacing: rng.gen_range(-1..=0), ..base }),
            1 => Some(ScheduleConstraint {
                kind: ConstraintKind::CT15,
                spacing: 0,
                window: Some((1, weeks as i64)),
                ..base
            }),
            2 => Some(ScheduleConstraint { kind: ConstraintKind::CT16, spacing: rng.gen_range(1..=2), ..base }),
            3 => Some(ScheduleConstraint { kind: ConstraintKind::CT17, spacing: 1, ..base }),
            4 => Some(ScheduleConstraint { kind: ConstraintKind::CT18, spacing: 1, ..base }),
            5 => Some(ScheduleConstraint {
                kind: ConstraintKind::CT19,
                resource_offset: vec![0, 0],
                resource_length: vec![1, 1],
                capacity: vec![1.0],
                ..base
            }),
            6 => Some(ScheduleConstraint { kind: ConstraintKind::CT20, capacity: vec![1.0; weeks], ..base }),
            7 => {
                let cap = round3(1.2 * t2.iter().map(|u| u.peak_power()).fold(0.0, f64::max) * 4.0);
                Some(ScheduleConstraint { kind: ConstraintKind::CT21, capacity: vec![cap; weeks], ..base })
            }
            _ => None,
        };
        constraints.extend(c);
    }

    Ok(Instance { grid, t1, t2, scenarios: scenario_list, constraints, first_stage_weight: 1.0 })
}
