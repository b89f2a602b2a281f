//! Constructive maps sending a feasible v0 point to a feasible point of v3
//! and v3(k0) with the same cost.

use super::exact::{weekly_cycles, ExactVars};
use super::steps::DRef;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::Model;
use crate::preprocess::TightenedWindows;

/// Splits `name[1,2,3]` into `("name", [1, 2, 3])`.
fn parse_name(name: &str) -> Option<(&str, Vec<usize>)> {
    let open = name.find('[')?;
    let inner = name[open + 1..].strip_suffix(']')?;
    let idx = inner.split(',').map(|x| x.parse().ok()).collect::<Option<Vec<usize>>>()?;
    Some((&name[..open], idx))
}

/// Values of a solved v0 model, with the fixed and absent variables filled in.
struct V0Point<'a> {
    m: &'a Model,
    x: &'a [f64],
    ev: ExactVars<'a>,
}

impl V0Point<'_> {
    fn named(&self, name: &str) -> Option<f64> {
        self.m.var_id(name).map(|v| self.x[v.0])
    }

    fn d(&self, i: usize, k: usize, w: i64) -> f64 {
        match self.ev.sv.get(i, k, w) {
            DRef::Const(c) => c,
            DRef::Var(v) => self.x[v.0],
        }
    }

    fn p(&self, i: usize, k: usize, s: usize, t: usize) -> f64 {
        self.ev.p.get(&(i, k, s, t)).map_or(0.0, |v| self.x[v.0])
    }

    fn stock(&self, inst: &Instance, i: usize, k: usize, s: usize, fin: bool) -> f64 {
        let e = if fin { self.ev.fin_expr(inst, i, k, s) } else { self.ev.init_expr(inst, i, k, s) };
        e.eval(self.x)
    }
}

fn v0_point<'a>(inst: &Instance, windows: &'a TightenedWindows, v0: &'a Model, x: &'a [f64]) -> Result<V0Point<'a>> {
    if v0.meta.formulation != "v0" {
        return Err(Error::Argument("source model must be v0".into()));
    }
    let kmax = inst.t2.iter().map(|u| u.last_cycle()).max().unwrap_or(0);
    Ok(V0Point { m: v0, x, ev: ExactVars::recover(v0, inst, windows, kmax)? })
}

fn unknown(name: &str) -> Error {
    Error::Model(format!("cannot map variable {name}"))
}

/// Image in v3 of the v0 point `x`.
pub fn map_v0_to_v3(
    inst: &Instance,
    windows: &TightenedWindows,
    v0: &Model,
    x: &[f64],
    v3: &Model,
) -> Result<Vec<f64>> {
    let src = v0_point(inst, windows, v0, x)?;
    let weeks = inst.weeks() as i64;
    v3.variables
        .iter()
        .map(|v| {
            let (head, idx) = parse_name(&v.name).ok_or_else(|| unknown(&v.name))?;
            Ok(match (head, idx.as_slice()) {
                ("d", &[i, k]) => src.d(i, k, weeks),
                ("p", &[i, s, t]) => (0..=inst.t2[i].last_cycle()).map(|k| src.p(i, k, s, t)).sum(),
                ("r" | "pt1" | "xf", _) => src.named(&v.name).unwrap_or(0.0),
                _ => return Err(unknown(&v.name)),
            })
        })
        .collect()
}

/// Image in v3(k0) of the v0 point `x`: production of cycles after `k0` is
/// added to cycle `k0`.
pub fn map_v0_to_v3_k0(
    inst: &Instance,
    windows: &TightenedWindows,
    v0: &Model,
    x: &[f64],
    v3k: &Model,
    k0: usize,
) -> Result<Vec<f64>> {
    let src = v0_point(inst, windows, v0, x)?;
    let weeks = inst.weeks() as i64;
    let weekly = weekly_cycles(inst, k0);
    let tail = |i: usize, k: usize| k == weekly[i] && weekly[i] < inst.t2[i].last_cycle();
    v3k.variables
        .iter()
        .map(|v| {
            let (head, idx) = parse_name(&v.name).ok_or_else(|| unknown(&v.name))?;
            Ok(match (head, idx.as_slice()) {
                ("d", &[i, k, w]) => src.d(i, k, w as i64),
                ("d", &[i, k]) => src.d(i, k, weeks),
                ("p", &[i, k, s, t]) if tail(i, k) => {
                    (k..=inst.t2[i].last_cycle()).map(|l| src.p(i, l, s, t)).sum()
                }
                ("p", &[i, k, s, t]) => src.p(i, k, s, t),
                ("xinit", &[i, k, s]) => src.stock(inst, i, k, s, false),
                ("xfin", &[i, k, s]) if tail(i, k) => {
                    let later: f64 = (k + 1..=inst.t2[i].last_cycle())
                        .map(|l| (0..inst.steps()).map(|t| inst.grid.fuel_factor[t] * src.p(i, l, s, t)).sum::<f64>())
                        .sum();
                    src.stock(inst, i, k, s, true) - later
                }
                ("xfin", &[i, k, s]) => src.stock(inst, i, k, s, true),
                ("r" | "pt1" | "xf", _) => src.named(&v.name).unwrap_or(0.0),
                _ => return Err(unknown(&v.name)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_split_into_indices() {
        assert_eq!(parse_name("p[1,0,2,13]"), Some(("p", vec![1, 0, 2, 13])));
        assert_eq!(parse_name("xf[0,1]"), Some(("xf", vec![0, 1])));
        assert_eq!(parse_name("bad"), None);
    }
}
