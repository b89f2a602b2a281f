//! v3: every outage relaxed to a single "takes place" binary, with one
//! production variable per unit and a cumulated-fuel bound on the final stock.

use super::steps::{DRef, StepVars};
use crate::error::Result;
use crate::instance::Instance;
use crate::model::{LinExpr, Model, ModelMeta, Sense, Tag};
use crate::preprocess::TightenedWindows;

/// `Bo_{k-1} / Q_k` summed over cycles after `from`: the most fuel the refuel
/// law can add when the residual stock sits below the threshold.
fn below_threshold_gain(inst: &Instance, i: usize, from: usize) -> f64 {
    let c = &inst.t2[i].cycles;
    (from + 1..c.len()).map(|k| c[k - 1].threshold / c[k].retention).sum()
}

/// `Delta_i` of the v3 cumulated-fuel row.
pub fn v3_delta(inst: &Instance, i: usize) -> f64 {
    let c = &inst.t2[i].cycles;
    let spread = c.iter().map(|x| x.threshold - c[0].threshold).fold(f64::NEG_INFINITY, f64::max);
    spread + below_threshold_gain(inst, i, 0)
}

/// `Delta'_i` of the v3(k0) cumulated-fuel row.
pub fn v3_k0_delta(inst: &Instance, i: usize, k0: usize) -> f64 {
    let c = &inst.t2[i].cycles;
    let spread = c[k0..].iter().map(|x| x.threshold - c[k0].threshold).fold(0.0, f64::max);
    spread + below_threshold_gain(inst, i, k0)
}

pub fn build_v3(inst: &Instance, windows: &TightenedWindows) -> Result<Model> {
    let n_s = inst.scenarios.len();
    let n_t = inst.steps();
    let mut m = Model::new("v3");
    m.meta = ModelMeta {
        formulation: "v3".into(),
        k0: None,
        ct6: "off".into(),
        scenarios: (0..n_s).collect(),
    };
    let weekly = vec![0; inst.t2.len()];
    let sv = StepVars::declare(&mut m, inst, windows, &weekly)?;
    let weeks = sv.weeks();

    for _ in &windows.conflicts {
        m.add_constraint(LinExpr::new(), Sense::Ge, 1.0, Tag::PANtw1)?;
    }
    let mut obj = LinExpr::new();
    let mut refuels: Vec<LinExpr> = Vec::new();
    for (i, u) in inst.t2.iter().enumerate() {
        let mut total = LinExpr::new();
        for k in 1..=u.last_cycle() {
            let c = &u.cycles[k];
            let d = sv.at_end(i, k);
            let id = match d {
                DRef::Const(v) if v > 0.5 => Some(m.continuous(format!("r[{i},{k}]"), c.refuel_min, c.refuel_max)?),
                DRef::Const(_) => None,
                DRef::Var(dv) => {
                    let id = m.continuous(format!("r[{i},{k}]"), 0.0, c.refuel_max)?;
                    m.add_constraint(LinExpr::var(id).term(dv, -c.refuel_min), Sense::Ge, 0.0, Tag::PANrefuel)?;
                    m.add_constraint(LinExpr::var(id).term(dv, -c.refuel_max), Sense::Le, 0.0, Tag::PANrefuel)?;
                    Some(id)
                }
            };
            if let Some(id) = id {
                total.add_term(id, 1.0);
                obj.add_term(id, inst.first_stage_weight * c.refuel_cost);
            }
            let mut e = sv.expr(i, k, weeks);
            sv.add(&mut e, i, k - 1, weeks, -1.0);
            e.normalize();
            if !e.is_constant() || e.constant > 1e-9 {
                m.add_constraint(e, Sense::Le, 0.0, Tag::outageOrder)?;
            }
        }
        refuels.push(total);
    }

    let mut p = vec![vec![Vec::with_capacity(n_t); n_s]; inst.t2.len()];
    for (i, u) in inst.t2.iter().enumerate() {
        for (s, ps) in p[i].iter_mut().enumerate() {
            for t in 0..n_t {
                ps.push(m.continuous(format!("p[{i},{s},{t}]"), 0.0, u.max_power[t])?);
            }
        }
    }
    let mut pt1 = vec![vec![Vec::with_capacity(n_t); n_s]; inst.t1.len()];
    for (j, u) in inst.t1.iter().enumerate() {
        for (s, ps) in pt1[j].iter_mut().enumerate() {
            for t in 0..n_t {
                let id = m.continuous(format!("pt1[{j},{s},{t}]"), u.min_power[s][t], u.max_power[s][t])?;
                obj.add_term(id, inst.scenarios[s].weight * u.cost[s][t] * inst.grid.step_duration[t]);
                ps.push(id);
            }
        }
    }
    for (s, sc) in inst.scenarios.iter().enumerate() {
        for t in 0..n_t {
            let mut e = LinExpr::new();
            for pi in &p {
                e.add_term(pi[s][t], 1.0);
            }
            for pj in &pt1 {
                e.add_term(pj[s][t], 1.0);
            }
            m.add_constraint(e, Sense::Eq, sc.demand[t], Tag::PANdemand)?;
        }
    }

    for (i, u) in inst.t2.iter().enumerate() {
        let delta = v3_delta(inst, i);
        for (s, sc) in inst.scenarios.iter().enumerate() {
            let xf = m.continuous(format!("xf[{i},{s}]"), 0.0, u.max_stock())?;
            obj.add_term(xf, -sc.weight * u.final_stock_value);
            let mut e = LinExpr::var(xf);
            e.add_scaled(&refuels[i], -1.0);
            for t in 0..n_t {
                e.add_term(p[i][s][t], inst.grid.fuel_factor[t]);
            }
            m.add_constraint(e, Sense::Le, delta + u.initial_stock, Tag::bornesAprouver)?;
            // The final stock fits in the last cycle started.
            let mut e = LinExpr::var(xf);
            for k in 0..=u.last_cycle() {
                let sk = u.cycles[k].max_stock;
                sv.add(&mut e, i, k, weeks, -sk);
                sv.add(&mut e, i, k + 1, weeks, sk);
            }
            m.add_constraint(e, Sense::Le, 0.0, Tag::stockMaxFin)?;
        }
    }
    m.set_objective(obj)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_synthetic, Dims};

    #[test]
    fn single_cycle_constant_threshold_has_zero_spread() {
        let mut inst = generate_synthetic(3, Dims::new(1, 1, 0, 1, 4, 4)).unwrap();
        for c in &mut inst.t2[0].cycles {
            c.threshold = 7.0;
        }
        assert_eq!(v3_delta(&inst, 0), 0.0);
    }
}
