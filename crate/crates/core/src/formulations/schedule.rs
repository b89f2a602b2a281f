//! Scheduling constraints CT14-CT21 written on step variables.

use super::steps::StepVars;
use crate::instance::{ConstraintKind, Instance, ScheduleConstraint};
use crate::model::{Constraint, LinExpr, Sense, Tag};

/// Constant rows below this slack are dropped as satisfied.
const CONST_TOL: f64 = 1e-9;

fn tag_of(kind: ConstraintKind) -> Tag {
    match kind {
        ConstraintKind::CT14 => Tag::CT14,
        ConstraintKind::CT15 => Tag::CT15,
        ConstraintKind::CT16 => Tag::CT16,
        ConstraintKind::CT17 => Tag::CT17,
        ConstraintKind::CT18 => Tag::CT18,
        ConstraintKind::CT19 => Tag::CT19,
        ConstraintKind::CT20 => Tag::CT20,
        ConstraintKind::CT21 => Tag::CT21,
    }
}

/// Left-hand side of `c` at week `w`, keeping only members with `k <= kmax`.
pub fn schedule_lhs(inst: &Instance, sv: &StepVars, c: &ScheduleConstraint, w: i64, kmax: usize) -> LinExpr {
    let mut e = LinExpr::new();
    for (j, o) in c.outages.iter().enumerate() {
        let (i, k) = (o.0, o.1);
        if k > kmax {
            continue;
        }
        let da = inst.t2[i].cycles[k].outage_weeks;
        let mut diff = |a: i64, b: i64, coef: f64| {
            sv.add(&mut e, i, k, a, coef);
            sv.add(&mut e, i, k, b, -coef);
        };
        match c.kind {
            ConstraintKind::CT14 | ConstraintKind::CT15 => diff(w, w - (da + c.spacing).max(0), 1.0),
            ConstraintKind::CT16 => diff(w, w - c.spacing, 1.0),
            ConstraintKind::CT17 => diff(w - da, w - da - c.spacing, 1.0),
            ConstraintKind::CT18 => {
                diff(w, w - c.spacing, 1.0);
                diff(w - da, w - da - c.spacing, 1.0);
            }
            ConstraintKind::CT19 => {
                let l = c.resource_offset[j];
                diff(w - l, w - l - c.resource_length[j], 1.0);
            }
            ConstraintKind::CT20 => diff(w, w - da, 1.0),
            ConstraintKind::CT21 => {
                let pw: f64 = inst.grid.steps_in_week(w as usize).map(|t| inst.t2[i].max_power[t]).sum();
                diff(w, w - da, pw);
            }
        }
    }
    e.normalize();
    e
}

/// One row per constraint and active week. Rows whose left-hand side is
/// constant are kept only when violated, so an impossible schedule shows
/// up as an infeasible model.
pub fn build_schedule_constraints(inst: &Instance, sv: &StepVars, kmax: usize) -> Vec<Constraint> {
    let mut rows = Vec::new();
    for c in &inst.constraints {
        for w in 1..=inst.weeks() {
            if !c.applies_to_week(w) {
                continue;
            }
            let expr = schedule_lhs(inst, sv, c, w as i64, kmax);
            let rhs = c.rhs(w);
            if expr.is_constant() && expr.constant <= rhs + CONST_TOL {
                continue;
            }
            rows.push(Constraint { expr, sense: Sense::Le, rhs, tag: tag_of(c.kind) });
        }
    }
    rows
}
