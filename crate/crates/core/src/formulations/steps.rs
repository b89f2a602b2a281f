//! Step variables `d_{i,k,w}` and the conventions for indices outside the
//! declared range.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::{Instance, OutageRef};
use crate::model::{LinExpr, Model, VarId};
use crate::preprocess::TightenedWindows;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DRef {
    Const(f64),
    Var(VarId),
}

/// Resolves `d_{i,k,w}` to a declared binary or a constant.
///
/// Cycles `k <= weekly[i]` have one variable per week. Later cycles carry a
/// single aggregated binary `d[i,k]` standing for `d_{i,k,W}`.
#[derive(Debug, Clone)]
pub struct StepVars<'a> {
    windows: &'a TightenedWindows,
    weeks: i64,
    weekly: Vec<usize>,
    last: Vec<usize>,
    weekly_ids: HashMap<(usize, usize, i64), VarId>,
    agg_ids: HashMap<(usize, usize), VarId>,
}

impl<'a> StepVars<'a> {
    /// Declares every step variable not fixed by the time windows, unit by
    /// unit, cycle by cycle, week by week.
    pub fn declare(m: &mut Model, inst: &Instance, windows: &'a TightenedWindows, weekly: &[usize]) -> Result<Self> {
        Self::resolve(inst, windows, weekly, |name| m.binary(name))
    }

    /// Finds the step variables of a model built with the same windows.
    pub fn lookup(m: &Model, inst: &Instance, windows: &'a TightenedWindows, weekly: &[usize]) -> Result<Self> {
        Self::resolve(inst, windows, weekly, |name| {
            m.var_id(&name).ok_or_else(|| Error::Model(format!("model has no variable {name}")))
        })
    }

    fn resolve(
        inst: &Instance,
        windows: &'a TightenedWindows,
        weekly: &[usize],
        mut var: impl FnMut(String) -> Result<VarId>,
    ) -> Result<Self> {
        let weeks = inst.weeks() as i64;
        let mut sv = StepVars {
            windows,
            weeks,
            weekly: weekly.to_vec(),
            last: inst.t2.iter().map(|u| u.last_cycle()).collect(),
            weekly_ids: HashMap::new(),
            agg_ids: HashMap::new(),
        };
        for (i, u) in inst.t2.iter().enumerate() {
            for k in 1..=u.last_cycle() {
                let o = OutageRef(i, k);
                if k <= weekly[i] {
                    for w in 1..=weeks {
                        if windows.fixed_value(o, w, weeks).is_none() {
                            let id = var(format!("d[{i},{k},{w}]"))?;
                            sv.weekly_ids.insert((i, k, w), id);
                        }
                    }
                } else if windows.fixed_value(o, weeks, weeks).is_none() {
                    let id = var(format!("d[{i},{k}]"))?;
                    sv.agg_ids.insert((i, k), id);
                }
            }
        }
        Ok(sv)
    }

    pub fn weeks(&self) -> i64 {
        self.weeks
    }

    pub fn get(&self, i: usize, k: usize, w: i64) -> DRef {
        if k > self.last[i] {
            return DRef::Const(0.0);
        }
        let w = w.min(self.weeks);
        if k > self.weekly[i] {
            debug_assert!(w == self.weeks, "aggregated cycle {k} queried at week {w}");
            return match self.agg_ids.get(&(i, k)) {
                Some(&id) => DRef::Var(id),
                None => self.constant(i, k, w),
            };
        }
        match self.weekly_ids.get(&(i, k, w)) {
            Some(&id) => DRef::Var(id),
            None => self.constant(i, k, w),
        }
    }

    fn constant(&self, i: usize, k: usize, w: i64) -> DRef {
        let v = self.windows.fixed_value(OutageRef(i, k), w, self.weeks).expect("undeclared step variable is fixed");
        DRef::Const(if v { 1.0 } else { 0.0 })
    }

    /// `d_{i,k,W}`, the indicator that outage `(i,k)` takes place.
    pub fn at_end(&self, i: usize, k: usize) -> DRef {
        self.get(i, k, self.weeks)
    }

    /// Adds `coef * d_{i,k,w}` to `e`.
    pub fn add(&self, e: &mut LinExpr, i: usize, k: usize, w: i64, coef: f64) {
        match self.get(i, k, w) {
            DRef::Const(c) => e.add_constant(coef * c),
            DRef::Var(v) => e.add_term(v, coef),
        }
    }

    pub fn expr(&self, i: usize, k: usize, w: i64) -> LinExpr {
        let mut e = LinExpr::new();
        self.add(&mut e, i, k, w, 1.0);
        e
    }

    pub fn is_var(&self, i: usize, k: usize, w: i64) -> bool {
        matches!(self.get(i, k, w), DRef::Var(_))
    }
}
