//! Light stretch constraints: upper bounds on T2 production as a concave
//! function of the residual fuel stock.

use super::exact::ExactVars;
use super::Ct6Mode;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{LinExpr, Model, Sense, Tag};
use crate::preprocess::TightenedWindows;

/// Adds residual-stock variables `x[i,s,t]` and the stretch caps to a v0 model.
///
/// Every profile must end at stock 0: below its last point the segment lines
/// would cap production for cycles that are not even running.
pub fn add_light_ct6(m: &mut Model, inst: &Instance, windows: &TightenedWindows, mode: Ct6Mode) -> Result<()> {
    if mode == Ct6Mode::Off {
        return Ok(());
    }
    if m.meta.formulation != "v0" {
        return Err(Error::Argument(format!("light CT6 rows extend v0, not {}", m.meta.formulation)));
    }
    for (i, u) in inst.t2.iter().enumerate() {
        for (k, c) in u.cycles.iter().enumerate() {
            if c.profile.last().is_some_and(|&(f, _)| f > 0.0) {
                return Err(Error::Model(format!("t2[{i}].cycles[{k}]: stretch profile must end at stock 0")));
            }
        }
        if mode == Ct6Mode::Shared && u.cycles.iter().any(|c| c.profile != u.cycles[0].profile) {
            return Err(Error::Model(format!("t2[{i}]: shared stretch rows need one profile for every cycle")));
        }
    }
    let kmax = inst.t2.iter().map(|u| u.last_cycle()).max().unwrap_or(0);
    let ev = ExactVars::recover(m, inst, windows, kmax)?;
    for (i, u) in inst.t2.iter().enumerate() {
        let big_m = u.max_stock();
        for s in 0..inst.scenarios.len() {
            let inits: Vec<LinExpr> = (0..=u.last_cycle()).map(|k| ev.init_expr(inst, i, k, s)).collect();
            for t in 0..inst.steps() {
                let x = m.continuous(format!("x[{i},{s},{t}]"), 0.0, big_m)?;
                let wt = inst.grid.week_of(t) as i64;
                let pmax = u.max_power[t];
                for (k, init) in inits.iter().enumerate() {
                    // x <= init_k - burn_k(<= t) + M (1 - d_{k,w_t} + d_{k+1,w_t})
                    let mut e = LinExpr::var(x);
                    e.add_scaled(init, -1.0);
                    e.add_scaled(&ev.burn_upto(inst, i, k, s, 0..t + 1), 1.0);
                    ev.sv.add(&mut e, i, k, wt, big_m);
                    ev.sv.add(&mut e, i, k + 1, wt, -big_m);
                    m.add_constraint(e, Sense::Le, big_m, Tag::defVarStretch)?;
                }
                match mode {
                    Ct6Mode::PerCycle => {
                        for k in 0..=u.last_cycle() {
                            for (a, b) in u.cycles[k].profile_lines() {
                                let mut e = LinExpr::new().term(x, -pmax * a);
                                if let Some(&p) = ev.p.get(&(i, k, s, t)) {
                                    e.add_term(p, 1.0);
                                }
                                m.add_constraint(e, Sense::Le, pmax * b, Tag::ctStretch1)?;
                            }
                        }
                    }
                    Ct6Mode::Shared => {
                        for (a, b) in u.cycles[0].profile_lines() {
                            let mut e = LinExpr::new().term(x, -pmax * a);
                            for k in 0..=u.last_cycle() {
                                if let Some(&p) = ev.p.get(&(i, k, s, t)) {
                                    e.add_term(p, 1.0);
                                }
                            }
                            m.add_constraint(e, Sense::Le, pmax * b, Tag::ctStretch2)?;
                        }
                    }
                    Ct6Mode::Off => unreachable!(),
                }
            }
        }
    }
    m.meta.ct6 = mode.to_string();
    Ok(())
}
