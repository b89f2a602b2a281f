//! Exact reductions applied before any model is built: minimal campaign
//! lengths, time-window tightening and the closed-form stock expressions.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, OutageRef};

/// Minimal campaign length (weeks) of every cycle, indexed `[i][k]`.
///
/// `Lmin_{i,k} = max(0, ceil((R_k - Amax_k) / (D^w P_i)))` where `R_k` is the
/// minimal refuel of outage `k` (the initial stock for cycle 0), `D^w` the
/// largest weekly fuel factor and `P_i` the unit's peak power.
pub fn compute_lmin(inst: &Instance) -> Result<Vec<Vec<i64>>> {
    let dw = inst.grid.max_week_fuel_factor();
    inst.t2
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let p = u.peak_power();
            u.cycles
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let fuel = if k == 0 { u.initial_stock } else { c.refuel_min };
                    lmin_formula(fuel, c.max_residual, dw, p).ok_or_else(|| {
                        Error::Infeasible(format!(
                            "unit {i} cycle {k} must burn {} fuel but has no power",
                            fuel - c.max_residual
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

/// `max(0, ceil((rmin - amax) / (dw * p)))`; `None` when fuel must be burnt
/// without any power.
pub fn lmin_formula(rmin: f64, amax: f64, dw: f64, p: f64) -> Option<i64> {
    let need = rmin - amax;
    if need <= 0.0 {
        return Some(0);
    }
    if dw * p <= 0.0 {
        return None;
    }
    // Guard the ceiling against representation noise: 80/8 must stay 10.
    let q = need / (dw * p);
    let r = q.round();
    Some(if (q - r).abs() <= 1e-9 * r.max(1.0) { r as i64 } else { q.ceil() as i64 })
}

/// Strengthened outage time windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TightenedWindows {
    /// `Lmin_{i,k}`.
    pub lmin: Vec<Vec<i64>>,
    /// `To~_{i,k}`; for cycle 0 the fixed start week.
    pub earliest: Vec<Vec<i64>>,
    /// `Ta~_{i,k}`; `None` while the outage may still be skipped.
    pub latest: Vec<Vec<Option<i64>>>,
    /// Outages that cannot start inside the horizon.
    pub removed: BTreeSet<OutageRef>,
    /// Outages left with an empty window: evidence that the instance is infeasible.
    pub conflicts: Vec<OutageRef>,
}

impl TightenedWindows {
    /// The instance windows without any propagation.
    pub fn original(inst: &Instance) -> Self {
        let weeks = inst.weeks() as i64;
        let mut removed = BTreeSet::new();
        let mut conflicts = Vec::new();
        let earliest: Vec<Vec<i64>> =
            inst.t2.iter().map(|u| u.cycles.iter().map(|c| c.earliest_start).collect()).collect();
        let latest: Vec<Vec<Option<i64>>> = inst
            .t2
            .iter()
            .map(|u| u.cycles.iter().map(|c| c.latest_start.filter(|&ta| ta <= weeks)).collect())
            .collect();
        for o in inst.outages() {
            if earliest[o.0][o.1] > weeks {
                removed.insert(o);
                if latest[o.0][o.1].is_some() {
                    conflicts.push(o);
                }
            }
        }
        Self {
            lmin: inst.t2.iter().map(|u| vec![0; u.cycles.len()]).collect(),
            earliest,
            latest,
            removed,
            conflicts,
        }
    }

    pub fn is_removed(&self, o: OutageRef) -> bool {
        self.removed.contains(&o)
    }

    /// Outage must start inside the horizon.
    pub fn is_mandatory(&self, o: OutageRef) -> bool {
        o.1 > 0 && !self.is_removed(o) && self.latest[o.0][o.1].is_some()
    }

    /// Value of the step variable `d_{i,k,w}` when fixed by the window.
    ///
    /// `k = 0` is the initial cycle (started at its fixed week), `k` beyond the
    /// last cycle is never started, and weeks past the horizon repeat week `W`.
    pub fn fixed_value(&self, o: OutageRef, w: i64, weeks: i64) -> Option<bool> {
        let OutageRef(i, k) = o;
        if k >= self.earliest[i].len() {
            return Some(false);
        }
        if k == 0 {
            return Some(w >= self.earliest[i][0]);
        }
        if self.is_removed(o) {
            return Some(false);
        }
        let w = w.min(weeks);
        if w < self.earliest[i][k] {
            return Some(false);
        }
        match self.latest[i][k] {
            Some(ta) if w >= ta => Some(true),
            _ => None,
        }
    }

    /// Number of step variables `d_{i,k,w}`, `w` in `1..=W`, left free.
    pub fn free_binaries(&self, weeks: usize) -> usize {
        let w_max = weeks as i64;
        let mut n = 0;
        for (i, ks) in self.earliest.iter().enumerate() {
            for k in 1..ks.len() {
                n += (1..=w_max).filter(|&w| self.fixed_value(OutageRef(i, k), w, w_max).is_none()).count();
            }
        }
        n
    }
}

/// Propagates the time windows along each unit's cycle sequence.
///
/// Forward: `To~_k = max(To_k, To~_{k-1} + Da_{k-1} + Lmin_{k-1})`, since
/// campaign `k-1` lasts at least `Lmin_{k-1}` weeks before outage `k`.
/// Backward, whenever outage `k+1` is mandatory:
/// `Ta~_k = min(Ta_k, Ta~_{k+1} - Da_k - Lmin_k)`, which also makes outage `k`
/// mandatory. Outages whose tightened earliest start lies past the horizon
/// are removed.
pub fn tighten_time_windows(inst: &Instance) -> Result<TightenedWindows> {
    let lmin = compute_lmin(inst)?;
    let mut tw = TightenedWindows::original(inst);
    tw.lmin = lmin;
    tw.removed.clear();
    tw.conflicts.clear();
    let weeks = inst.weeks() as i64;
    for (i, u) in inst.t2.iter().enumerate() {
        let n = u.cycles.len();
        for k in 1..n {
            let prev = &u.cycles[k - 1];
            let bound = tw.earliest[i][k - 1] + prev.outage_weeks + tw.lmin[i][k - 1];
            tw.earliest[i][k] = tw.earliest[i][k].max(bound);
        }
        for k in (1..n.saturating_sub(1)).rev() {
            if tw.earliest[i][k + 1] > weeks {
                continue;
            }
            if let Some(next) = tw.latest[i][k + 1] {
                let bound = next - u.cycles[k].outage_weeks - tw.lmin[i][k];
                tw.latest[i][k] = Some(tw.latest[i][k].map_or(bound, |ta| ta.min(bound)));
            }
        }
        for k in 1..n {
            let o = OutageRef(i, k);
            let to = tw.earliest[i][k];
            if to > weeks {
                tw.removed.insert(o);
                if tw.latest[i][k].is_some() {
                    tw.conflicts.push(o);
                }
            } else if tw.latest[i][k].is_some_and(|ta| ta < to) {
                tw.conflicts.push(o);
            }
        }
    }
    Ok(tw)
}

/// Window of one outage before and after tightening.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowRow {
    pub unit: usize,
    pub cycle: usize,
    /// Minimal length of the campaign preceding the outage.
    pub lmin_before: i64,
    pub earliest: i64,
    pub latest: Option<i64>,
    pub tightened_earliest: i64,
    pub tightened_latest: Option<i64>,
    pub removed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreprocessReport {
    pub windows: Vec<WindowRow>,
    /// Free step binaries with the original windows.
    pub binaries_before: usize,
    /// Free step binaries after tightening.
    pub binaries_after: usize,
    pub conflicts: Vec<OutageRef>,
}

pub fn preprocess_report(inst: &Instance) -> Result<PreprocessReport> {
    let orig = TightenedWindows::original(inst);
    let tw = tighten_time_windows(inst)?;
    let windows = inst
        .outages()
        .map(|o| {
            let OutageRef(i, k) = o;
            WindowRow {
                unit: i,
                cycle: k,
                lmin_before: tw.lmin[i][k - 1],
                earliest: orig.earliest[i][k],
                latest: orig.latest[i][k],
                tightened_earliest: tw.earliest[i][k],
                tightened_latest: tw.latest[i][k],
                removed: tw.is_removed(o),
            }
        })
        .collect();
    Ok(PreprocessReport {
        windows,
        binaries_before: orig.free_binaries(inst.weeks()),
        binaries_after: tw.free_binaries(inst.weeks()),
        conflicts: tw.conflicts.clone(),
    })
}

/// Affine expression `constant + sum refuel[l] r_l + sum burn[l] B_l` where
/// `B_l = sum_t F_t p_{i,l,s,t}` is the fuel burnt during cycle `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct StockExpr {
    pub constant: f64,
    /// Coefficient of `r_{i,l}`, indexed by `l` (entry 0 unused).
    pub refuel: Vec<f64>,
    /// Coefficient of the burn `B_l` of cycle `l`.
    pub burn: Vec<f64>,
}

impl StockExpr {
    fn zero(n: usize) -> Self {
        Self { constant: 0.0, refuel: vec![0.0; n], burn: vec![0.0; n] }
    }

    pub fn eval(&self, refuel: &[f64], burn: &[f64]) -> f64 {
        self.constant
            + self.refuel.iter().zip(refuel).map(|(a, b)| a * b).sum::<f64>()
            + self.burn.iter().zip(burn).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Closed-form stock levels of one T2 unit as functions of refuels and burns.
/// Scenario-independent: the scenario enters through the burns only.
#[derive(Debug, Clone, PartialEq)]
pub struct StockEliminationPlan {
    /// `q_k = (Q_k - 1) / Q_k`.
    pub loss: Vec<f64>,
    /// `x^init_{i,k}` per cycle.
    pub init: Vec<StockExpr>,
    /// `x^fin_{i,k}` per cycle.
    pub fin: Vec<StockExpr>,
}

impl StockEliminationPlan {
    /// `q_{m,n} = prod_{l=m..=n} q_l`; 1 for an empty range.
    pub fn q_product(&self, m: usize, n: usize) -> f64 {
        if m > n {
            return 1.0;
        }
        self.loss[m..=n].iter().product()
    }
}

/// Unrolls `x^init_k = Bo_k + r_k + q_k (x^fin_{k-1} - Bo_{k-1})` and
/// `x^fin_k = x^init_k - B_k` from `x^init_0 = Xi`, giving
/// `x^init_k = q_{1,k} Xi + sum_{l=1..k} q_{l+1,k} (Bo_l + r_l - q_l (B_{l-1} + Bo_{l-1}))`.
pub fn stock_elimination_coefficients(inst: &Instance, unit: usize) -> StockEliminationPlan {
    let u = &inst.t2[unit];
    let n = u.cycles.len();
    let loss: Vec<f64> = u.cycles.iter().map(|c| c.loss_factor()).collect();
    let mut plan = StockEliminationPlan { loss, init: Vec::with_capacity(n), fin: Vec::with_capacity(n) };
    for k in 0..n {
        let mut e = StockExpr::zero(n);
        if k == 0 {
            e.constant = u.initial_stock;
        } else {
            e.constant = plan.q_product(1, k) * u.initial_stock;
            for l in 1..=k {
                let tail = plan.q_product(l + 1, k);
                let ql = plan.loss[l];
                e.constant += tail * (u.cycles[l].threshold - ql * u.cycles[l - 1].threshold);
                e.refuel[l] += tail;
                e.burn[l - 1] -= tail * ql;
            }
        }
        let mut f = e.clone();
        f.burn[k] -= 1.0;
        plan.init.push(e);
        plan.fin.push(f);
    }
    plan
}
