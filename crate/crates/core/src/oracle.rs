//! Ground truth for tiny instances: enumerate every outage schedule and solve
//! the remaining continuous problem exactly.
//!
//! The inner problems are written here from the problem definition, without
//! going through the formulation builders, so the two can check each other.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{ConstraintKind, Instance};
use crate::model::{LinExpr, Model, Sense, Tag, VarId};
use crate::preprocess::TightenedWindows;
use crate::solver::{solve_lp, SolveStatus};

pub const DEFAULT_CAP: u64 = 1_000_000;

/// Start week of each outage, `starts[i][k]`; entry 0 is the fixed initial
/// start and `None` marks an outage that does not take place.
pub type Schedule = Vec<Vec<Option<i64>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ct6Oracle {
    Off,
    /// Impose the stretch profile by forward simulation.
    Exact,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub ct6: Ct6Oracle,
    /// Refuse when more than this many inner problems would be needed.
    pub cap: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { ct6: Ct6Oracle::Off, cap: DEFAULT_CAP }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    /// Optimal value, `+inf` when every schedule is infeasible.
    pub value: f64,
    pub schedule: Option<Schedule>,
    /// Schedules passing the scheduling constraints.
    pub schedules: usize,
    /// Inner problems solved.
    pub inner_solves: usize,
}

impl OracleResult {
    pub fn is_feasible(&self) -> bool {
        self.value.is_finite()
    }
}

/// `d_{i,k,w}` induced by a schedule.
fn step(sched: &Schedule, i: usize, k: usize, w: i64, weeks: i64) -> f64 {
    match sched[i].get(k) {
        Some(&Some(start)) if start <= w.min(weeks) => 1.0,
        _ => 0.0,
    }
}

/// Whether a schedule meets every scheduling constraint, evaluated directly.
pub fn schedule_satisfies(inst: &Instance, sched: &Schedule) -> bool {
    let weeks = inst.weeks() as i64;
    let d = |i: usize, k: usize, w: i64| step(sched, i, k, w, weeks);
    for c in &inst.constraints {
        for w in 1..=weeks {
            if !c.applies_to_week(w as usize) {
                continue;
            }
            let mut lhs = 0.0;
            for (j, o) in c.outages.iter().enumerate() {
                let (i, k) = (o.0, o.1);
                let da = inst.t2[i].cycles[k].outage_weeks;
                let in_outage = d(i, k, w) - d(i, k, w - da);
                lhs += match c.kind {
                    ConstraintKind::CT14 | ConstraintKind::CT15 => {
                        d(i, k, w) - d(i, k, w - (da + c.spacing).max(0))
                    }
                    ConstraintKind::CT16 => d(i, k, w) - d(i, k, w - c.spacing),
                    ConstraintKind::CT17 => d(i, k, w - da) - d(i, k, w - da - c.spacing),
                    ConstraintKind::CT18 => {
                        d(i, k, w) - d(i, k, w - c.spacing) + d(i, k, w - da) - d(i, k, w - da - c.spacing)
                    }
                    ConstraintKind::CT19 => {
                        let l = c.resource_offset[j];
                        d(i, k, w - l) - d(i, k, w - l - c.resource_length[j])
                    }
                    ConstraintKind::CT20 => in_outage,
                    ConstraintKind::CT21 => {
                        let pw: f64 = inst.grid.steps_in_week(w as usize).map(|t| inst.t2[i].max_power[t]).sum();
                        pw * in_outage
                    }
                };
            }
            if lhs > c.rhs(w as usize) + 1e-9 {
                return false;
            }
        }
    }
    true
}

/// Candidate start weeks of outage `(i,k)`: the window, plus `None` when the
/// outage is optional.
fn candidates(windows: &TightenedWindows, i: usize, k: usize, weeks: i64) -> Vec<Option<i64>> {
    let to = windows.earliest[i][k];
    match windows.latest[i][k] {
        Some(ta) if ta <= weeks => (to..=ta).map(Some).collect(),
        _ => (to..=weeks).map(Some).chain(std::iter::once(None)).collect(),
    }
}

fn unit_schedules(inst: &Instance, windows: &TightenedWindows, i: usize) -> Vec<Vec<Option<i64>>> {
    let weeks = inst.weeks() as i64;
    let u = &inst.t2[i];
    let mut out = vec![vec![Some(u.initial_start_week())]];
    for k in 1..=u.last_cycle() {
        let cand = candidates(windows, i, k, weeks);
        let prev_da = u.cycles[k - 1].outage_weeks;
        let mut next = Vec::new();
        for partial in &out {
            for &c in &cand {
                let ok = match (partial[k - 1], c) {
                    (_, None) => true,
                    (None, Some(_)) => false,
                    // No skipping: outage k starts after outage k-1 is over.
                    (Some(prev), Some(start)) => start >= prev + prev_da,
                };
                if ok {
                    let mut v = partial.clone();
                    v.push(c);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}

/// Every schedule within the windows that respects outage order and the
/// scheduling constraints.
pub fn enumerate_schedules(inst: &Instance, windows: &TightenedWindows, cap: u64) -> Result<Vec<Schedule>> {
    let weeks = inst.weeks() as i64;
    let mut raw: u64 = 1;
    for (i, u) in inst.t2.iter().enumerate() {
        for k in 1..=u.last_cycle() {
            raw = raw.saturating_mul(candidates(windows, i, k, weeks).len() as u64);
        }
    }
    if raw > cap {
        return Err(Error::Oracle(format!("{raw} candidate schedules exceed the cap of {cap}")));
    }
    let mut all: Vec<Schedule> = vec![Vec::new()];
    for i in 0..inst.t2.len() {
        let unit = unit_schedules(inst, windows, i);
        all = all
            .into_iter()
            .flat_map(|s| {
                unit.iter().map(move |u| {
                    let mut s = s.clone();
                    s.push(u.clone());
                    s
                })
            })
            .collect();
    }
    all.retain(|s| schedule_satisfies(inst, s));
    Ok(all)
}

/// Cycle producing at step `t`, if any.
fn active_cycle(inst: &Instance, sched: &Schedule, i: usize, t: usize) -> Option<usize> {
    let w = inst.grid.week_of(t) as i64;
    let u = &inst.t2[i];
    (0..=u.last_cycle()).find(|&k| {
        let Some(start) = sched[i][k] else { return false };
        let next = sched[i].get(k + 1).copied().flatten();
        start + u.cycles[k].outage_weeks <= w && next.is_none_or(|n| w < n)
    })
}

/// How a campaign meets the stretch profile.
#[derive(Debug, Clone)]
enum Stretch {
    /// Stock stays at or above the threshold.
    Above,
    /// Stock reaches the threshold at the start of step `tau`; production is
    /// imposed from there on.
    From { tau: usize, tail: Vec<f64> },
    /// Campaign opens below the threshold with a known stock.
    Whole { tail: Vec<f64> },
}

/// Production at one step under the profile: `p = Pmax min(1, cap(e - F p))`.
fn stretch_step(cycle: &crate::instance::CycleSpec, stock: f64, fuel: f64, pmax: f64) -> f64 {
    let ratio = |p: f64| cycle.stretch_cap(stock - fuel * p).clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0, pmax);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid > pmax * ratio(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

fn simulate(inst: &Instance, i: usize, k: usize, mut stock: f64, steps: &[usize]) -> Vec<f64> {
    let u = &inst.t2[i];
    steps
        .iter()
        .map(|&t| {
            let p = stretch_step(&u.cycles[k], stock, inst.grid.fuel_factor[t], u.max_power[t]);
            stock -= inst.grid.fuel_factor[t] * p;
            p
        })
        .collect()
}

struct Campaign {
    i: usize,
    k: usize,
    s: usize,
    steps: Vec<usize>,
    options: Vec<Stretch>,
}

fn campaigns(inst: &Instance, sched: &Schedule) -> Vec<Campaign> {
    let mut out = Vec::new();
    for (i, u) in inst.t2.iter().enumerate() {
        for k in 0..=u.last_cycle() {
            if sched[i][k].is_none() {
                continue;
            }
            let steps: Vec<usize> = (0..inst.steps()).filter(|&t| active_cycle(inst, sched, i, t) == Some(k)).collect();
            if steps.is_empty() {
                continue;
            }
            let bo = u.cycles[k].threshold;
            for s in 0..inst.scenarios.len() {
                let options = if k == 0 && u.initial_stock < bo {
                    vec![Stretch::Whole { tail: simulate(inst, i, k, u.initial_stock, &steps) }]
                } else {
                    let mut o = vec![Stretch::Above];
                    for (n, &tau) in steps.iter().enumerate() {
                        o.push(Stretch::From { tau, tail: simulate(inst, i, k, bo, &steps[n..]) });
                    }
                    o
                };
                out.push(Campaign { i, k, s, steps: steps.clone(), options });
            }
        }
    }
    out
}

/// Continuous optimum for a fixed schedule and fixed stretch choices.
fn inner_value(inst: &Instance, sched: &Schedule, stretch: &[(&Campaign, &Stretch)]) -> Result<f64> {
    let n_s = inst.scenarios.len();
    let n_t = inst.steps();
    let mut m = Model::new("oracle");
    let mut obj = LinExpr::new();

    let mut r: Vec<Vec<Option<VarId>>> = Vec::new();
    for (i, u) in inst.t2.iter().enumerate() {
        let mut ri = vec![None];
        for k in 1..=u.last_cycle() {
            ri.push(match sched[i][k] {
                Some(_) => {
                    let c = &u.cycles[k];
                    let v = m.continuous(format!("r{i}_{k}"), c.refuel_min, c.refuel_max)?;
                    obj.add_term(v, inst.first_stage_weight * c.refuel_cost);
                    Some(v)
                }
                None => None,
            });
        }
        r.push(ri);
    }

    // p[i][s][t] with the cycle it belongs to.
    let mut p: Vec<Vec<Vec<Option<(usize, VarId)>>>> = vec![vec![vec![None; n_t]; n_s]; inst.t2.len()];
    for (i, u) in inst.t2.iter().enumerate() {
        for t in 0..n_t {
            if let Some(k) = active_cycle(inst, sched, i, t) {
                for (s, ps) in p[i].iter_mut().enumerate() {
                    ps[t] = Some((k, m.continuous(format!("p{i}_{s}_{t}"), 0.0, u.max_power[t])?));
                }
            }
        }
    }
    for (s, sc) in inst.scenarios.iter().enumerate() {
        for t in 0..n_t {
            let mut e = LinExpr::new();
            for (j, u) in inst.t1.iter().enumerate() {
                let v = m.continuous(format!("q{j}_{s}_{t}"), u.min_power[s][t], u.max_power[s][t])?;
                obj.add_term(v, sc.weight * u.cost[s][t] * inst.grid.step_duration[t]);
                e.add_term(v, 1.0);
            }
            for pi in &p {
                if let Some((_, v)) = pi[s][t] {
                    e.add_term(v, 1.0);
                }
            }
            m.add_constraint(e, Sense::Eq, sc.demand[t], Tag::PANdemand)?;
        }
    }

    for (i, u) in inst.t2.iter().enumerate() {
        let last = (0..=u.last_cycle()).rev().find(|&k| sched[i][k].is_some()).unwrap_or(0);
        for s in 0..n_s {
            let mut prev_fin: Option<VarId> = None;
            let mut fins = Vec::new();
            for k in 0..=u.last_cycle() {
                let c = &u.cycles[k];
                let init = m.continuous(format!("a{i}_{k}_{s}"), 0.0, c.max_stock)?;
                let fin = m.continuous(format!("b{i}_{k}_{s}"), 0.0, f64::INFINITY)?;
                match prev_fin {
                    None => {
                        m.add_constraint(LinExpr::var(init), Sense::Eq, u.initial_stock, Tag::PANfuelInit)?;
                    }
                    Some(pf) => {
                        let q = c.loss_factor();
                        let prev = &u.cycles[k - 1];
                        let mut e = LinExpr::var(init).term(pf, -q);
                        if let Some(rv) = r[i][k] {
                            e.add_term(rv, -1.0);
                        }
                        m.add_constraint(e, Sense::Eq, c.threshold - q * prev.threshold, Tag::PANpertes)?;
                    }
                }
                let mut e = LinExpr::var(fin).term(init, -1.0);
                for t in 0..n_t {
                    if let Some((kk, v)) = p[i][s][t] {
                        if kk == k {
                            e.add_term(v, inst.grid.fuel_factor[t]);
                        }
                    }
                }
                m.add_constraint(e, Sense::Eq, 0.0, Tag::PANconso)?;
                if k < u.last_cycle() && sched[i][k + 1].is_some() {
                    m.add_constraint(LinExpr::var(fin), Sense::Le, c.max_residual, Tag::PANanticip)?;
                }
                prev_fin = Some(fin);
                fins.push((init, fin));
            }
            let xf = m.continuous(format!("f{i}_{s}"), 0.0, f64::INFINITY)?;
            m.add_constraint(LinExpr::var(xf).term(fins[last].1, -1.0), Sense::Le, 0.0, Tag::PANfuelFinal)?;
            obj.add_term(xf, -inst.scenarios[s].weight * u.final_stock_value);

            for &(camp, choice) in stretch.iter().filter(|(c, _)| c.i == i && c.s == s) {
                let (init, fin) = fins[camp.k];
                let bo = u.cycles[camp.k].threshold;
                let pv = |t: usize| p[i][s][t].expect("campaign step has production").1;
                match choice {
                    Stretch::Above => {
                        m.add_constraint(LinExpr::var(fin), Sense::Ge, bo, Tag::ctStretch1)?;
                    }
                    Stretch::From { tau, tail } => {
                        let mut e = LinExpr::var(init);
                        for &t in camp.steps.iter().filter(|&&t| t < *tau) {
                            e.add_term(pv(t), -inst.grid.fuel_factor[t]);
                        }
                        m.add_constraint(e, Sense::Eq, bo, Tag::ctStretch1)?;
                        fix_tail(&mut m, camp, *tau, tail, &pv)?;
                    }
                    Stretch::Whole { tail } => fix_tail(&mut m, camp, camp.steps[0], tail, &pv)?,
                }
            }
        }
    }
    m.set_objective(obj)?;
    let res = solve_lp(&m);
    match res.status {
        SolveStatus::Optimal => Ok(res.primal),
        SolveStatus::Infeasible => Ok(f64::INFINITY),
        SolveStatus::Unbounded => Err(Error::Oracle("inner problem is unbounded".into())),
        SolveStatus::LimitReached => Err(Error::Oracle("inner problem hit the iteration limit".into())),
    }
}

fn fix_tail(m: &mut Model, camp: &Campaign, from: usize, tail: &[f64], pv: &dyn Fn(usize) -> VarId) -> Result<()> {
    let steps: Vec<usize> = camp.steps.iter().copied().filter(|&t| t >= from).collect();
    for (&t, &val) in steps.iter().zip(tail) {
        m.add_constraint(LinExpr::var(pv(t)), Sense::Eq, val, Tag::ctStretch1)?;
    }
    Ok(())
}

fn cartesian(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..n).map(move |x| {
                    let mut v = v.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// Minimum over schedules of the inner continuous optimum.
pub fn oracle_optimum(inst: &Instance, windows: &TightenedWindows, cfg: &OracleConfig) -> Result<OracleResult> {
    let schedules = enumerate_schedules(inst, windows, cfg.cap)?;
    // Stretch choices of every schedule.
    let plans: Vec<(Vec<Campaign>, Vec<Vec<usize>>)> = schedules
        .iter()
        .map(|s| match cfg.ct6 {
            Ct6Oracle::Off => (Vec::new(), vec![Vec::new()]),
            Ct6Oracle::Exact => {
                let camps = campaigns(inst, s);
                let sizes: Vec<usize> = camps.iter().map(|c| c.options.len()).collect();
                let total: u64 = sizes.iter().map(|&n| n as u64).product();
                let combos = if total <= cfg.cap { cartesian(&sizes) } else { Vec::new() };
                (camps, combos)
            }
        })
        .collect();
    let total: u64 = plans.iter().map(|p| p.1.len() as u64).sum();
    if total > cfg.cap || plans.iter().any(|p| p.1.is_empty()) {
        return Err(Error::Oracle(format!("stretch choices exceed the cap of {}", cfg.cap)));
    }
    let jobs: Vec<(usize, &Vec<usize>)> =
        plans.iter().enumerate().flat_map(|(n, p)| p.1.iter().map(move |c| (n, c))).collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, combo)| {
            let camps = &plans[n].0;
            let choice: Vec<(&Campaign, &Stretch)> = camps.iter().zip(combo).map(|(c, &o)| (c, &c.options[o])).collect();
            inner_value(inst, &schedules[n], &choice)
        })
        .collect::<Result<_>>()?;
    let mut best = (f64::INFINITY, None);
    for (&(n, _), &v) in jobs.iter().zip(&values) {
        if v < best.0 {
            best = (v, Some(n));
        }
    }
    Ok(OracleResult {
        value: best.0,
        schedule: best.1.map(|n| schedules[n].clone()),
        schedules: schedules.len(),
        inner_solves: jobs.len(),
    })
}
