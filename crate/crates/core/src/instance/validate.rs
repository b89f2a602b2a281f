use super::{ConstraintKind, Instance};
use crate::error::Violation;

const WEIGHT_TOL: f64 = 1e-9;

/// Checks every invariant of the instance data; an empty list means valid.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |loc: String, msg: String| out.push(Violation::new(loc, msg));

    let g = &inst.grid;
    let steps = g.steps();
    let weeks = g.weeks;
    if steps == 0 {
        push("grid".into(), "no production steps".into());
    }
    if weeks == 0 {
        push("grid.weeks".into(), "no weeks".into());
    }
    if g.fuel_factor.len() != steps {
        push("grid.fuel_factor".into(), format!("length {} differs from step count {steps}", g.fuel_factor.len()));
    }
    if g.step_to_week.len() != steps {
        push("grid.step_to_week".into(), format!("length {} differs from step count {steps}", g.step_to_week.len()));
    }
    for (t, &d) in g.step_duration.iter().enumerate() {
        if !(d > 0.0 && d.is_finite()) {
            push(format!("grid.step_duration[{t}]"), format!("duration {d} is not strictly positive"));
        }
    }
    for (t, &f) in g.fuel_factor.iter().enumerate() {
        if !(f > 0.0 && f.is_finite()) {
            push(format!("grid.fuel_factor[{t}]"), format!("fuel factor {f} is not strictly positive"));
        }
    }
    let mut prev = 1;
    for (t, &w) in g.step_to_week.iter().enumerate() {
        if w < 1 || w > weeks {
            push(format!("grid.step_to_week[{t}]"), format!("week {w} outside [1, {weeks}]"));
        } else if w < prev {
            push(format!("grid.step_to_week[{t}]"), "weeks are not non-decreasing".into());
        } else if w > prev + 1 || (t == 0 && w != 1) {
            push(format!("grid.step_to_week[{t}]"), format!("week {} has no production step", w - 1));
        }
        prev = w;
    }
    if steps > 0 && weeks > 0 && g.step_to_week.last().is_some_and(|&w| w != weeks) {
        push("grid.step_to_week".into(), format!("week {weeks} has no production step"));
    }

    let n_scen = inst.scenarios.len();
    if n_scen == 0 {
        push("scenarios".into(), "no scenario".into());
    }
    for (s, sc) in inst.scenarios.iter().enumerate() {
        if !(sc.weight >= 0.0) {
            push(format!("scenarios[{s}].weight"), format!("negative weight {}", sc.weight));
        }
        if sc.demand.len() != steps {
            push(format!("scenarios[{s}].demand"), format!("length {} differs from step count {steps}", sc.demand.len()));
        }
    }
    let total: f64 = inst.scenarios.iter().map(|s| s.weight).sum();
    if n_scen > 0 && (total - inst.first_stage_weight).abs() > WEIGHT_TOL {
        let msg = if inst.first_stage_weight == 1.0 {
            format!("scenario weights do not sum to 1 (sum = {total})")
        } else {
            format!("scenario weights sum to {total}, expected {}", inst.first_stage_weight)
        };
        push("scenarios".into(), msg);
    }
    if !(inst.first_stage_weight > 0.0) {
        push("first_stage_weight".into(), "must be positive".into());
    }

    for (j, u) in inst.t1.iter().enumerate() {
        for (name, m) in [("cost", &u.cost), ("min_power", &u.min_power), ("max_power", &u.max_power)] {
            if m.len() != n_scen || m.iter().any(|row| row.len() != steps) {
                push(format!("t1[{j}].{name}"), format!("shape differs from {n_scen} scenarios x {steps} steps"));
            }
        }
        for (s, (lo, hi)) in u.min_power.iter().zip(&u.max_power).enumerate() {
            for (t, (a, b)) in lo.iter().zip(hi).enumerate() {
                if a > b {
                    push(format!("t1[{j}] s={s} t={t}"), format!("min power {a} exceeds max power {b}"));
                }
            }
        }
    }

    for (i, u) in inst.t2.iter().enumerate() {
        if !(u.initial_stock >= 0.0) {
            push(format!("t2[{i}].initial_stock"), format!("negative initial stock {}", u.initial_stock));
        }
        if u.max_power.len() != steps {
            push(format!("t2[{i}].max_power"), format!("length {} differs from step count {steps}", u.max_power.len()));
        }
        if u.max_power.iter().any(|&p| !(p >= 0.0)) {
            push(format!("t2[{i}].max_power"), "negative max power".into());
        }
        if u.cycles.is_empty() {
            push(format!("t2[{i}].cycles"), "missing cycle 0".into());
            continue;
        }
        let c0 = &u.cycles[0];
        if c0.earliest_start > 1 {
            push(format!("t2[{i}].cycles[0]"), "initial cycle must start at or before week 1".into());
        }
        if c0.latest_start.is_some_and(|ta| ta != c0.earliest_start) {
            push(format!("t2[{i}].cycles[0]"), "initial cycle start week is fixed".into());
        }
        for (k, c) in u.cycles.iter().enumerate() {
            let loc = format!("t2[{i}].cycles[{k}]");
            if let Some(ta) = c.latest_start {
                if c.earliest_start > ta {
                    push(loc.clone(), format!("To {} > Ta {ta}", c.earliest_start));
                }
            }
            if k > 0 && c.earliest_start < 1 {
                push(loc.clone(), format!("To {} before week 1", c.earliest_start));
            }
            if c.outage_weeks < 0 {
                push(loc.clone(), "negative outage duration".into());
            }
            if !(0.0 <= c.refuel_min && c.refuel_min <= c.refuel_max) {
                push(loc.clone(), format!("refuel bounds Rmin {} > Rmax {}", c.refuel_min, c.refuel_max));
            }
            if !(c.retention > 0.0 && c.retention < 1.0) {
                push(loc.clone(), format!("retention Q {} outside (0, 1)", c.retention));
            }
            if !(0.0 <= c.threshold && c.threshold <= c.max_stock) {
                push(loc.clone(), format!("threshold Bo {} outside [0, Smax {}]", c.threshold, c.max_stock));
            }
            for (m, w) in c.profile.windows(2).enumerate() {
                if !(w[1].0 < w[0].0) {
                    push(format!("{loc}.profile[{}]", m + 1), "stock levels are not strictly decreasing".into());
                }
            }
            for (m, &(_, y)) in c.profile.iter().enumerate() {
                if !(0.0..=1.0).contains(&y) {
                    push(format!("{loc}.profile[{m}]"), format!("power ratio {y} outside [0, 1]"));
                }
            }
            let lines = c.profile_lines();
            // slope must not decrease towards low stock
            for m in 1..lines.len() {
                if lines[m].0 < lines[m - 1].0 - 1e-12 {
                    push(format!("{loc}.profile[{}]", m + 1), "profile is not concave".into());
                }
            }
        }
    }

    for (ci, c) in inst.constraints.iter().enumerate() {
        let loc = format!("constraints[{ci}]");
        for o in &c.outages {
            let ok = inst.t2.get(o.0).is_some_and(|u| o.1 < u.cycles.len());
            if !ok {
                push(loc.clone(), format!("outage ({}, {}) does not exist", o.0, o.1));
            }
        }
        if let Some((u, v)) = c.window {
            if u < 1 || v > weeks as i64 || u > v {
                push(loc.clone(), format!("window [{u}, {v}] not within [1, {weeks}]"));
            }
        }
        match c.kind {
            ConstraintKind::CT16 | ConstraintKind::CT17 | ConstraintKind::CT18 if c.spacing <= 0 => {
                push(loc.clone(), "spacing must be positive".into());
            }
            ConstraintKind::CT19 => {
                if c.resource_offset.len() != c.outages.len() || c.resource_length.len() != c.outages.len() {
                    push(loc.clone(), "resource offsets/lengths must match the member count".into());
                }
                if c.capacity.len() != 1 {
                    push(loc.clone(), "CT19 needs exactly one capacity".into());
                }
            }
            ConstraintKind::CT20 | ConstraintKind::CT21 if c.capacity.len() != weeks => {
                push(loc.clone(), format!("needs one capacity per week ({weeks})"));
            }
            _ => {}
        }
    }

    out
}
