//! Solver-agnostic MIP representation.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

impl Variable {
    pub fn is_fixed(&self) -> bool {
        self.lb == self.ub
    }
}

/// Sparse affine expression.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarId) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn term(mut self, v: VarId, c: f64) -> Self {
        self.add_term(v, c);
        self
    }

    pub fn add_term(&mut self, v: VarId, c: f64) {
        if c != 0.0 {
            self.terms.push((v, c));
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.constant += scale * other.constant;
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
    }

    /// Sorts by variable, merges duplicates and drops zero coefficients.
    pub fn normalize(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// Constraint family of a row; the names follow the usual model labels.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Tag {
    PANprecedence,
    PANtw0,
    PANtw1,
    PANdemand,
    PANflexPower,
    PANcoupling,
    PANrefuel,
    PANfuelInit,
    PANconso,
    PANpertes,
    PANmaxStock,
    PANanticip,
    PANfuelFinal,
    CT14,
    CT15,
    CT16,
    CT17,
    CT18,
    CT19,
    CT20,
    CT21,
    ctStretch1,
    defVarStretch,
    ctStretch2,
    /// `d_{i,k+1} <= d_{i,k}` in the aggregated-outage relaxations.
    outageOrder,
    bornesAprouver,
    stockMaxFin,
    bornesAprouver02,
    agregPowCycle,
    bornesAprouver2,
}

impl Tag {
    pub const ALL: [Tag; 30] = [
        Tag::PANprecedence,
        Tag::PANtw0,
        Tag::PANtw1,
        Tag::PANdemand,
        Tag::PANflexPower,
        Tag::PANcoupling,
        Tag::PANrefuel,
        Tag::PANfuelInit,
        Tag::PANconso,
        Tag::PANpertes,
        Tag::PANmaxStock,
        Tag::PANanticip,
        Tag::PANfuelFinal,
        Tag::CT14,
        Tag::CT15,
        Tag::CT16,
        Tag::CT17,
        Tag::CT18,
        Tag::CT19,
        Tag::CT20,
        Tag::CT21,
        Tag::ctStretch1,
        Tag::defVarStretch,
        Tag::ctStretch2,
        Tag::outageOrder,
        Tag::bornesAprouver,
        Tag::stockMaxFin,
        Tag::bornesAprouver02,
        Tag::agregPowCycle,
        Tag::bornesAprouver2,
    ];
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    /// Left-hand side; its constant is always 0 once added to a model.
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: Tag,
}

impl Constraint {
    /// Signed violation of the row at `x` (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.expr.eval(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Descriptive data carried along with a model.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelMeta {
    pub formulation: String,
    pub k0: Option<usize>,
    pub ct6: String,
    pub scenarios: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: LinExpr,
    pub meta: ModelMeta,
    by_name: HashMap<String, VarId>,
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> Result<VarId> {
        let name = name.into();
        if lb > ub || lb.is_nan() || ub.is_nan() {
            return Err(Error::Model(format!("variable {name}: lower bound {lb} exceeds upper bound {ub}")));
        }
        if kind == VarKind::Binary && (lb < 0.0 || ub > 1.0) {
            return Err(Error::Model(format!("binary {name} with bounds [{lb}, {ub}]")));
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::Model(format!("duplicate variable name {name}")));
        }
        let id = VarId(self.variables.len());
        self.by_name.insert(name.clone(), id);
        self.variables.push(Variable { name, kind, lb, ub });
        Ok(id)
    }

    /// Adds a continuous variable with bounds `[lb, ub]`.
    pub fn continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64) -> Result<VarId> {
        self.add_variable(name, VarKind::Continuous, lb, ub)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_variable(name, VarKind::Binary, 0.0, 1.0)
    }

    /// Adds `expr sense rhs`; the expression's constant moves to the right-hand side.
    pub fn add_constraint(&mut self, mut expr: LinExpr, sense: Sense, rhs: f64, tag: Tag) -> Result<usize> {
        expr.normalize();
        if let Some(&(v, _)) = expr.terms.iter().find(|t| t.0 .0 >= self.variables.len()) {
            return Err(Error::Model(format!("constraint {tag} references unknown variable id {}", v.0)));
        }
        if let Some(&(_, c)) = expr.terms.iter().find(|t| !t.1.is_finite()) {
            return Err(Error::Model(format!("constraint {tag} has non-finite coefficient {c}")));
        }
        let rhs = rhs - expr.constant;
        if !rhs.is_finite() {
            return Err(Error::Model(format!("constraint {tag} has non-finite right-hand side")));
        }
        expr.constant = 0.0;
        self.constraints.push(Constraint { expr, sense, rhs, tag });
        Ok(self.constraints.len() - 1)
    }

    pub fn set_objective(&mut self, mut expr: LinExpr) -> Result<()> {
        expr.normalize();
        if expr.terms.iter().any(|t| t.0 .0 >= self.variables.len()) {
            return Err(Error::Model("objective references an unknown variable".into()));
        }
        self.objective = expr;
        Ok(())
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn count_tag(&self, tag: Tag) -> usize {
        self.constraints.iter().filter(|c| c.tag == tag).count()
    }

    /// Row counts per tag, in tag order, omitting empty tags.
    pub fn tag_counts(&self) -> Vec<(Tag, usize)> {
        Tag::ALL.iter().map(|&t| (t, self.count_tag(t))).filter(|&(_, n)| n > 0).collect()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xv)| (v.lb - xv).max(xv - v.ub).max(0.0))
            .fold(0.0, f64::max);
        self.constraints.iter().map(|c| c.violation(x)).fold(bounds, f64::max)
    }

    /// Values of `x` keyed by variable name.
    pub fn named_values(&self, x: &[f64]) -> HashMap<String, f64> {
        self.variables.iter().zip(x).map(|(v, &xv)| (v.name.clone(), xv)).collect()
    }

    /// 64-bit digest of the model's mathematical content. Variable names and
    /// the insertion order of constraints do not contribute.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        for v in &self.variables {
            h.update(format!("v {:?} {:016x} {:016x}\n", v.kind, v.lb.to_bits(), v.ub.to_bits()).as_bytes());
        }
        let mut rows: Vec<String> = self.constraints.iter().map(canonical_row).collect();
        rows.sort_unstable();
        for r in rows {
            h.update(r.as_bytes());
        }
        h.update(format!("obj {}\n", canonical_expr(&self.objective)).as_bytes());
        let digest = h.finalize();
        u64::from_be_bytes(digest[..8].try_into().expect("sha256 digest has 32 bytes"))
    }

    /// Human-readable dump, one constraint per line.
    pub fn debug_dump(&self) -> String {
        let mut out = format!("model {}\nminimize {}\n", self.name, self.render(&self.objective));
        for c in &self.constraints {
            out.push_str(&format!("[{}] {} {} {}\n", c.tag, self.render(&c.expr), c.sense, c.rhs));
        }
        for v in &self.variables {
            let kind = if v.kind == VarKind::Binary { " binary" } else { "" };
            out.push_str(&format!("{} <= {} <= {}{kind}\n", v.lb, v.name, v.ub));
        }
        out
    }

    fn render(&self, e: &LinExpr) -> String {
        let mut s: String = e
            .terms
            .iter()
            .map(|&(v, c)| format!("{}{} {}", if c < 0.0 { " - " } else { " + " }, c.abs(), self.variables[v.0].name))
            .collect();
        if e.constant != 0.0 || s.is_empty() {
            s.push_str(&format!(" + {}", e.constant));
        }
        s.trim_start_matches(" + ").trim_start().to_string()
    }
}

fn canonical_expr(e: &LinExpr) -> String {
    let mut s = format!("{:016x}", e.constant.to_bits());
    for &(v, c) in &e.terms {
        s.push_str(&format!(" {}:{:016x}", v.0, c.to_bits()));
    }
    s
}

fn canonical_row(c: &Constraint) -> String {
    format!("c {:?} {:?} {:016x} {}\n", c.tag, c.sense, c.rhs.to_bits(), canonical_expr(&c.expr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_follow_insertion_order() {
        let mut m = Model::new("t");
        assert_eq!(m.binary("d[0,1,3]").unwrap(), VarId(0));
        assert_eq!(m.continuous("r[0,1]", 0.0, 5.0).unwrap(), VarId(1));
        assert!(m.binary("d[0,1,3]").is_err());
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let mut m = Model::new("t");
        m.continuous("x", 0.0, 1.0).unwrap();
        let e = LinExpr::var(VarId(3));
        assert!(m.add_constraint(e, Sense::Le, 1.0, Tag::PANdemand).is_err());
    }

    #[test]
    fn expression_constant_moves_to_rhs() {
        let mut m = Model::new("t");
        let x = m.continuous("x", 0.0, 10.0).unwrap();
        let mut e = LinExpr::var(x).term(x, 2.0);
        e.add_constant(4.0);
        m.add_constraint(e, Sense::Le, 10.0, Tag::PANdemand).unwrap();
        let c = &m.constraints[0];
        assert_eq!(c.expr.terms, vec![(x, 3.0)]);
        assert_eq!(c.rhs, 6.0);
    }

    #[test]
    fn fingerprint_ignores_row_order_and_names() {
        let build = |swap: bool, prefix: &str| {
            let mut m = Model::new("t");
            let x = m.continuous(format!("{prefix}x"), 0.0, 10.0).unwrap();
            let y = m.binary(format!("{prefix}y")).unwrap();
            let rows = [
                (LinExpr::var(x).term(y, 2.0), Sense::Le, 4.0, Tag::PANdemand),
                (LinExpr::var(x), Sense::Ge, 1.0, Tag::PANconso),
            ];
            let order: Vec<usize> = if swap { vec![1, 0] } else { vec![0, 1] };
            for i in order {
                let (e, s, r, t) = rows[i].clone();
                m.add_constraint(e, s, r, t).unwrap();
            }
            m.set_objective(LinExpr::var(x)).unwrap();
            m
        };
        let a = build(false, "");
        assert_eq!(a.fingerprint(), build(true, "other_").fingerprint());
        let mut c = build(false, "");
        c.constraints[0].rhs += 1e-3;
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn replacing_objective_keeps_structure() {
        let mut m = Model::new("t");
        let x = m.continuous("x", 0.0, 1.0).unwrap();
        m.set_objective(LinExpr::var(x)).unwrap();
        let first = m.fingerprint();
        m.set_objective(LinExpr::var(x).term(x, 1.0)).unwrap();
        assert_ne!(first, m.fingerprint());
        m.set_objective(LinExpr::var(x)).unwrap();
        assert_eq!(first, m.fingerprint());
    }
}
