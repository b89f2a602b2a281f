//! The step-variable model v0 and its parametric relaxation v3(k0), which
//! keeps cycles `k <= k0` exact and aggregates every later cycle.

use std::collections::HashMap;

use super::schedule::build_schedule_constraints;
use super::steps::{DRef, StepVars};
use super::v3::v3_k0_delta;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{LinExpr, Model, ModelMeta, Sense, Tag, VarId};
use crate::preprocess::{stock_elimination_coefficients, StockEliminationPlan, StockExpr, TightenedWindows};

const CONST_TOL: f64 = 1e-9;

/// Handles on the variables of an exact (v0-style) model.
pub(crate) struct ExactVars<'a> {
    pub sv: StepVars<'a>,
    /// Last exact cycle per unit.
    pub weekly: Vec<usize>,
    pub r: HashMap<(usize, usize), VarId>,
    pub p: HashMap<(usize, usize, usize, usize), VarId>,
    pub xinit: HashMap<(usize, usize, usize), VarId>,
    pub xfin: HashMap<(usize, usize, usize), VarId>,
    /// Present when stocks are eliminated.
    pub plans: Option<Vec<StockEliminationPlan>>,
}

impl<'a> ExactVars<'a> {
    /// Recovers the handles of a model built by this module.
    pub fn recover(m: &Model, inst: &Instance, windows: &'a TightenedWindows, k0: usize) -> Result<Self> {
        let weekly = weekly_cycles(inst, k0);
        let sv = StepVars::lookup(m, inst, windows, &weekly)?;
        let mut ev = ExactVars {
            sv,
            weekly,
            r: HashMap::new(),
            p: HashMap::new(),
            xinit: HashMap::new(),
            xfin: HashMap::new(),
            plans: None,
        };
        for (i, u) in inst.t2.iter().enumerate() {
            for k in 0..=u.last_cycle() {
                if let Some(id) = m.var_id(&format!("r[{i},{k}]")) {
                    ev.r.insert((i, k), id);
                }
                if k > ev.weekly[i] {
                    continue;
                }
                for s in 0..inst.scenarios.len() {
                    if let Some(id) = m.var_id(&format!("xinit[{i},{k},{s}]")) {
                        ev.xinit.insert((i, k, s), id);
                    }
                    if let Some(id) = m.var_id(&format!("xfin[{i},{k},{s}]")) {
                        ev.xfin.insert((i, k, s), id);
                    }
                    for t in 0..inst.steps() {
                        if let Some(id) = m.var_id(&format!("p[{i},{k},{s},{t}]")) {
                            ev.p.insert((i, k, s, t), id);
                        }
                    }
                }
            }
        }
        if ev.xinit.is_empty() && !inst.t2.is_empty() {
            ev.plans = Some((0..inst.t2.len()).map(|i| stock_elimination_coefficients(inst, i)).collect());
        }
        Ok(ev)
    }

    pub fn r_expr(&self, i: usize, k: usize) -> LinExpr {
        self.r.get(&(i, k)).map(|&v| LinExpr::var(v)).unwrap_or_default()
    }

    /// `sum_{t in steps} F_t p_{i,k,s,t}`.
    pub fn burn_upto(&self, inst: &Instance, i: usize, k: usize, s: usize, steps: std::ops::Range<usize>) -> LinExpr {
        let mut e = LinExpr::new();
        for t in steps {
            if let Some(&v) = self.p.get(&(i, k, s, t)) {
                e.add_term(v, inst.grid.fuel_factor[t]);
            }
        }
        e
    }

    pub fn burn(&self, inst: &Instance, i: usize, k: usize, s: usize) -> LinExpr {
        self.burn_upto(inst, i, k, s, 0..inst.steps())
    }

    fn plan_expr(&self, inst: &Instance, i: usize, s: usize, se: &StockExpr) -> LinExpr {
        let mut e = LinExpr::constant(se.constant);
        for (l, &c) in se.refuel.iter().enumerate() {
            if c != 0.0 {
                e.add_scaled(&self.r_expr(i, l), c);
            }
        }
        for (l, &c) in se.burn.iter().enumerate() {
            if c != 0.0 && l <= self.weekly[i] {
                e.add_scaled(&self.burn(inst, i, l, s), c);
            }
        }
        e
    }

    pub fn init_expr(&self, inst: &Instance, i: usize, k: usize, s: usize) -> LinExpr {
        match &self.plans {
            Some(plans) => self.plan_expr(inst, i, s, &plans[i].init[k]),
            None => LinExpr::var(self.xinit[&(i, k, s)]),
        }
    }

    pub fn fin_expr(&self, inst: &Instance, i: usize, k: usize, s: usize) -> LinExpr {
        match &self.plans {
            Some(plans) => self.plan_expr(inst, i, s, &plans[i].fin[k]),
            None => LinExpr::var(self.xfin[&(i, k, s)]),
        }
    }
}

/// Last cycle modelled week by week, per unit.
pub(crate) fn weekly_cycles(inst: &Instance, k0: usize) -> Vec<usize> {
    inst.t2.iter().map(|u| u.last_cycle().min(k0)).collect()
}

/// Builds v0: every cycle exact.
pub fn build_v0(inst: &Instance, windows: &TightenedWindows, eliminate_stocks: bool) -> Result<Model> {
    let kmax = inst.t2.iter().map(|u| u.last_cycle()).max().unwrap_or(0);
    let mut m = build_exact(inst, windows, kmax, eliminate_stocks, false)?;
    m.name = "v0".into();
    m.meta.formulation = "v0".into();
    m.meta.k0 = None;
    Ok(m)
}

/// Builds v3(k0): cycles `k <= k0` exact, later cycles aggregated.
pub fn build_v3_k0(inst: &Instance, windows: &TightenedWindows, k0: usize, eliminate_stocks: bool) -> Result<Model> {
    let kmax = inst.t2.iter().map(|u| u.last_cycle()).max().unwrap_or(0);
    if k0 > kmax {
        return Err(Error::Argument(format!("k0 = {k0} exceeds the last cycle index {kmax}")));
    }
    build_exact(inst, windows, k0, eliminate_stocks, true)
}

fn add_row(m: &mut Model, e: LinExpr, sense: Sense, rhs: f64, tag: Tag) -> Result<()> {
    m.add_constraint(e, sense, rhs, tag).map(|_| ())
}

/// `true` when a normalised expression is constant and satisfies `sense rhs`.
fn trivially_holds(e: &LinExpr, sense: Sense, rhs: f64) -> bool {
    let mut e = e.clone();
    e.normalize();
    e.is_constant()
        && match sense {
            Sense::Le => e.constant <= rhs + CONST_TOL,
            Sense::Ge => e.constant >= rhs - CONST_TOL,
            Sense::Eq => (e.constant - rhs).abs() <= CONST_TOL,
        }
}

fn build_exact(
    inst: &Instance,
    windows: &TightenedWindows,
    k0: usize,
    eliminate_stocks: bool,
    relaxed_tail: bool,
) -> Result<Model> {
    let n_s = inst.scenarios.len();
    let n_t = inst.steps();
    let weeks = inst.weeks() as i64;
    let mut m = Model::new(format!("v3k{k0}"));
    m.meta = ModelMeta {
        formulation: if relaxed_tail { "v3k".into() } else { "v0".into() },
        k0: relaxed_tail.then_some(k0),
        ct6: "off".into(),
        scenarios: (0..n_s).collect(),
    };
    let weekly = weekly_cycles(inst, k0);
    let sv = StepVars::declare(&mut m, inst, windows, &weekly)?;
    let mut ev = ExactVars {
        sv,
        weekly: weekly.clone(),
        r: HashMap::new(),
        p: HashMap::new(),
        xinit: HashMap::new(),
        xfin: HashMap::new(),
        plans: None,
    };
    let has_tail = |i: usize| weekly[i] < inst.t2[i].last_cycle();

    // Time windows: conflicting windows make the model infeasible.
    for _ in &windows.conflicts {
        add_row(&mut m, LinExpr::new(), Sense::Ge, 1.0, Tag::PANtw1)?;
    }
    for (i, _) in inst.t2.iter().enumerate() {
        for k in 1..=weekly[i] {
            for w in 2..=weeks {
                if let (DRef::Var(a), DRef::Var(b)) = (ev.sv.get(i, k, w - 1), ev.sv.get(i, k, w)) {
                    add_row(&mut m, LinExpr::var(a).term(b, -1.0), Sense::Le, 0.0, Tag::PANprecedence)?;
                }
            }
        }
    }

    // Refuelling, and ordering of the aggregated outages.
    for (i, u) in inst.t2.iter().enumerate() {
        for k in 1..=u.last_cycle() {
            let c = &u.cycles[k];
            match ev.sv.at_end(i, k) {
                DRef::Const(v) if v > 0.5 => {
                    let id = m.continuous(format!("r[{i},{k}]"), c.refuel_min, c.refuel_max)?;
                    ev.r.insert((i, k), id);
                }
                DRef::Const(_) => {}
                DRef::Var(d) => {
                    let id = m.continuous(format!("r[{i},{k}]"), 0.0, c.refuel_max)?;
                    ev.r.insert((i, k), id);
                    add_row(&mut m, LinExpr::var(id).term(d, -c.refuel_min), Sense::Ge, 0.0, Tag::PANrefuel)?;
                    add_row(&mut m, LinExpr::var(id).term(d, -c.refuel_max), Sense::Le, 0.0, Tag::PANrefuel)?;
                }
            }
            if k > weekly[i] {
                let mut e = ev.sv.expr(i, k, weeks);
                ev.sv.add(&mut e, i, k - 1, weeks, -1.0);
                if !trivially_holds(&e, Sense::Le, 0.0) {
                    add_row(&mut m, e, Sense::Le, 0.0, Tag::outageOrder)?;
                }
            }
        }
    }

    // T2 production, only where the campaign can be running.
    for s in 0..n_s {
        for t in 0..n_t {
            let wt = inst.grid.week_of(t) as i64;
            for (i, u) in inst.t2.iter().enumerate() {
                let pmax = u.max_power[t];
                for k in 0..=weekly[i] {
                    let da = u.cycles[k].outage_weeks;
                    let mut cap = LinExpr::new();
                    ev.sv.add(&mut cap, i, k, wt - da, pmax);
                    if !(k == weekly[i] && has_tail(i)) {
                        ev.sv.add(&mut cap, i, k + 1, wt, -pmax);
                    }
                    cap.normalize();
                    if cap.is_constant() {
                        if cap.constant > CONST_TOL {
                            let id = m.continuous(format!("p[{i},{k},{s},{t}]"), 0.0, cap.constant)?;
                            ev.p.insert((i, k, s, t), id);
                        } else if cap.constant < -CONST_TOL {
                            add_row(&mut m, cap, Sense::Ge, 0.0, Tag::PANcoupling)?;
                        }
                        continue;
                    }
                    let id = m.continuous(format!("p[{i},{k},{s},{t}]"), 0.0, pmax)?;
                    ev.p.insert((i, k, s, t), id);
                    let mut e = LinExpr::var(id);
                    e.add_scaled(&cap, -1.0);
                    add_row(&mut m, e, Sense::Le, 0.0, Tag::PANcoupling)?;
                }
            }
        }
    }

    // T1 production and demand.
    let mut pt1 = HashMap::new();
    for (j, u) in inst.t1.iter().enumerate() {
        for s in 0..n_s {
            for t in 0..n_t {
                let id = m.continuous(format!("pt1[{j},{s},{t}]"), u.min_power[s][t], u.max_power[s][t])?;
                pt1.insert((j, s, t), id);
            }
        }
    }
    let demand_tag = if relaxed_tail { Tag::agregPowCycle } else { Tag::PANdemand };
    for (s, sc) in inst.scenarios.iter().enumerate() {
        for t in 0..n_t {
            let mut e = LinExpr::new();
            for (i, _) in inst.t2.iter().enumerate() {
                for k in 0..=weekly[i] {
                    if let Some(&v) = ev.p.get(&(i, k, s, t)) {
                        e.add_term(v, 1.0);
                    }
                }
            }
            for j in 0..inst.t1.len() {
                e.add_term(pt1[&(j, s, t)], 1.0);
            }
            add_row(&mut m, e, Sense::Eq, sc.demand[t], demand_tag)?;
        }
    }

    // Fuel stocks.
    if eliminate_stocks {
        ev.plans = Some((0..inst.t2.len()).map(|i| stock_elimination_coefficients(inst, i)).collect());
    }
    let mut xf = HashMap::new();
    for (i, u) in inst.t2.iter().enumerate() {
        let sbar = u.max_stock();
        for s in 0..n_s {
            for k in 0..=weekly[i] {
                let c = &u.cycles[k];
                let free_fin = k == weekly[i] && has_tail(i);
                if eliminate_stocks {
                    let init = ev.init_expr(inst, i, k, s);
                    if !trivially_holds(&init, Sense::Le, c.max_stock) {
                        add_row(&mut m, init.clone(), Sense::Le, c.max_stock, Tag::PANmaxStock)?;
                    }
                    // A free residual stock still starts from a nonnegative stock.
                    let e = if free_fin { init } else { ev.fin_expr(inst, i, k, s) };
                    if !trivially_holds(&e, Sense::Ge, 0.0) {
                        add_row(&mut m, e, Sense::Ge, 0.0, Tag::PANconso)?;
                    }
                    continue;
                }
                let xi = m.continuous(format!("xinit[{i},{k},{s}]"), 0.0, c.max_stock)?;
                let fin_lb = if free_fin { f64::NEG_INFINITY } else { 0.0 };
                let xo = m.continuous(format!("xfin[{i},{k},{s}]"), fin_lb, f64::INFINITY)?;
                ev.xinit.insert((i, k, s), xi);
                ev.xfin.insert((i, k, s), xo);
                if k == 0 {
                    add_row(&mut m, LinExpr::var(xi), Sense::Eq, u.initial_stock, Tag::PANfuelInit)?;
                } else {
                    let prev = &u.cycles[k - 1];
                    let q = c.loss_factor();
                    let mut e = LinExpr::var(xi).term(ev.xfin[&(i, k - 1, s)], -q);
                    e.add_scaled(&ev.r_expr(i, k), -1.0);
                    add_row(&mut m, e, Sense::Eq, c.threshold - q * prev.threshold, Tag::PANpertes)?;
                }
                let mut e = LinExpr::var(xo).term(xi, -1.0);
                e.add_scaled(&ev.burn(inst, i, k, s), 1.0);
                add_row(&mut m, e, Sense::Eq, 0.0, Tag::PANconso)?;
            }
            // Stock allowed before the next outage.
            for k in 0..weekly[i] {
                let c = &u.cycles[k];
                let mut e = ev.fin_expr(inst, i, k, s);
                ev.sv.add(&mut e, i, k + 1, weeks, c.max_stock - c.max_residual);
                let rhs = c.max_stock;
                if !trivially_holds(&e, Sense::Le, rhs) && !matches!(ev.sv.at_end(i, k + 1), DRef::Const(v) if v < 0.5) {
                    add_row(&mut m, e, Sense::Le, rhs, Tag::PANanticip)?;
                }
            }
            let id = m.continuous(format!("xf[{i},{s}]"), 0.0, sbar)?;
            xf.insert((i, s), id);
            // Final stock is the residual stock of the last cycle started.
            for k in 0..=weekly[i] {
                let mut ind = LinExpr::constant(1.0);
                ev.sv.add(&mut ind, i, k, weeks, -1.0);
                ev.sv.add(&mut ind, i, k + 1, weeks, 1.0);
                ind.normalize();
                if ind.is_constant() && ind.constant >= 1.0 - CONST_TOL {
                    continue;
                }
                let big_m = if k == weekly[i] && has_tail(i) {
                    sbar + (0..n_t).map(|t| inst.grid.fuel_factor[t] * u.max_power[t]).sum::<f64>()
                } else {
                    sbar
                };
                let mut e = LinExpr::var(id);
                e.add_scaled(&ev.fin_expr(inst, i, k, s), -1.0);
                e.add_scaled(&ind, -big_m);
                add_row(&mut m, e, Sense::Le, 0.0, Tag::PANfuelFinal)?;
            }
            // Aggregated tail: cumulated refuels bound the final stock.
            if has_tail(i) {
                let k0i = weekly[i];
                let mut e = LinExpr::var(id);
                e.add_scaled(&ev.fin_expr(inst, i, k0i, s), -1.0);
                for k in k0i + 1..=u.last_cycle() {
                    e.add_scaled(&ev.r_expr(i, k), -1.0);
                }
                ev.sv.add(&mut e, i, k0i, weeks, sbar);
                add_row(&mut m, e, Sense::Le, v3_k0_delta(inst, i, k0i) + sbar, Tag::bornesAprouver2)?;
            }
        }
    }

    for row in build_schedule_constraints(inst, &ev.sv, k0) {
        add_row(&mut m, row.expr, row.sense, row.rhs, row.tag)?;
    }

    // Objective: first-stage refuel cost plus expected T1 cost minus final fuel value.
    let mut obj = LinExpr::new();
    for (&(i, k), &v) in sorted(&ev.r) {
        obj.add_term(v, inst.first_stage_weight * inst.t2[i].cycles[k].refuel_cost);
    }
    for (j, u) in inst.t1.iter().enumerate() {
        for (s, sc) in inst.scenarios.iter().enumerate() {
            for t in 0..n_t {
                obj.add_term(pt1[&(j, s, t)], sc.weight * u.cost[s][t] * inst.grid.step_duration[t]);
            }
        }
    }
    for (i, u) in inst.t2.iter().enumerate() {
        for (s, sc) in inst.scenarios.iter().enumerate() {
            obj.add_term(xf[&(i, s)], -sc.weight * u.final_stock_value);
        }
    }
    m.set_objective(obj)?;
    Ok(m)
}

/// Map entries in key order, for deterministic output.
pub(crate) fn sorted<K: Ord + Copy, V>(map: &HashMap<K, V>) -> Vec<(&K, &V)> {
    let mut v: Vec<_> = map.iter().collect();
    v.sort_by_key(|e| *e.0);
    v
}
