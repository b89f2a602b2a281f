//! Fixed-format MPS output.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Model, Sense, VarKind};

const NAME_LEN: usize = 8;
const NUM_LEN: usize = 12;

/// Formats a number in at most 12 characters, keeping as many digits as fit.
fn fmt_num(x: f64) -> String {
    let plain = format!("{x}");
    if plain.len() <= NUM_LEN {
        return plain;
    }
    let fixed = (0..=NUM_LEN).map(|p| format!("{x:.p$}"));
    let sci = (0..=NUM_LEN).map(|p| format!("{x:.p$e}"));
    fixed
        .chain(sci)
        .filter(|s| s.len() <= NUM_LEN)
        .min_by(|a, b| {
            let ea = (a.parse::<f64>().unwrap_or(f64::NAN) - x).abs();
            let eb = (b.parse::<f64>().unwrap_or(f64::NAN) - x).abs();
            ea.total_cmp(&eb)
        })
        .expect("the 0-digit exponent form of a finite f64 fits in 12 characters")
}

fn base36(mut n: usize) -> String {
    const DIGITS: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    let mut s = Vec::new();
    loop {
        s.push(DIGITS[n % 36]);
        n /= 36;
        if n == 0 {
            break;
        }
    }
    s.reverse();
    String::from_utf8(s).expect("ascii digits")
}

/// Maps names to unique identifiers of at most 8 printable characters.
fn shorten_names<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let names: Vec<String> =
        names.map(|n| n.chars().filter(|c| c.is_ascii_graphic()).collect::<String>()).collect();
    let mut used: HashSet<String> = names.iter().filter(|n| n.len() <= NAME_LEN).cloned().collect();
    let mut seen: HashSet<String> = HashSet::new();
    let mut counter = 0usize;
    names
        .into_iter()
        .map(|n| {
            if n.len() <= NAME_LEN && !n.is_empty() && seen.insert(n.clone()) {
                return n;
            }
            loop {
                let suffix = format!("~{}", base36(counter));
                counter += 1;
                let keep = NAME_LEN.saturating_sub(suffix.len());
                let cand = format!("{}{}", &n[..keep.min(n.len())], suffix);
                if used.insert(cand.clone()) {
                    seen.insert(cand.clone());
                    return cand;
                }
            }
        })
        .collect()
}

/// Renders the model; identical models give identical text.
pub fn mps_string(m: &Model) -> String {
    let cols = shorten_names(m.variables.iter().map(|v| v.name.as_str()));
    let rows: Vec<String> = (0..m.constraints.len()).map(|r| format!("R{}", base36(r))).collect();
    let obj = "COST";

    // Column-major view of the rows.
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m.variables.len()];
    for (r, c) in m.constraints.iter().enumerate() {
        for &(v, a) in &c.expr.terms {
            by_col[v.0].push((r, a));
        }
    }
    let mut obj_coef = vec![0.0; m.variables.len()];
    for &(v, a) in &m.objective.terms {
        obj_coef[v.0] += a;
    }

    let mut out = String::new();
    let name: String = m.name.chars().filter(|c| c.is_ascii_graphic()).collect();
    writeln!(out, "NAME          {}", if name.is_empty() { "MODEL" } else { &name }).unwrap();
    out.push_str("ROWS\n");
    writeln!(out, " N  {obj}").unwrap();
    for (r, c) in m.constraints.iter().enumerate() {
        let t = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        writeln!(out, " {t}  {}", rows[r]).unwrap();
    }
    out.push_str("COLUMNS\n");
    for (j, col) in cols.iter().enumerate() {
        let mut any = false;
        if obj_coef[j] != 0.0 {
            writeln!(out, "    {col:<8}  {obj:<8}  {:>12}", fmt_num(obj_coef[j])).unwrap();
            any = true;
        }
        for &(r, a) in &by_col[j] {
            writeln!(out, "    {col:<8}  {:<8}  {:>12}", rows[r], fmt_num(a)).unwrap();
            any = true;
        }
        if !any {
            writeln!(out, "    {col:<8}  {obj:<8}  {:>12}", "0").unwrap();
        }
    }
    out.push_str("RHS\n");
    if m.objective.constant != 0.0 {
        writeln!(out, "    RHS       {obj:<8}  {:>12}", fmt_num(-m.objective.constant)).unwrap();
    }
    for (r, c) in m.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            writeln!(out, "    RHS       {:<8}  {:>12}", rows[r], fmt_num(c.rhs)).unwrap();
        }
    }
    out.push_str("BOUNDS\n");
    for (j, v) in m.variables.iter().enumerate() {
        let col = &cols[j];
        let mut line = |kind: &str, val: Option<f64>| {
            let val = val.map(|x| format!("  {:>12}", fmt_num(x))).unwrap_or_default();
            writeln!(out, " {kind:<2} BND       {col:<8}{val}").unwrap();
        };
        if v.is_fixed() {
            line("FX", Some(v.lb));
            continue;
        }
        if v.kind == VarKind::Binary && v.lb == 0.0 && v.ub == 1.0 {
            line("BV", None);
            continue;
        }
        if v.lb == f64::NEG_INFINITY {
            line("MI", None);
        } else if v.lb != 0.0 {
            line("LO", Some(v.lb));
        }
        if v.ub.is_finite() {
            line("UP", Some(v.ub));
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(m: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mps_string(m)).map_err(|e| Error::io(path, e))
}
