//! Dense-tableau bounded-variable primal simplex.
//!
//! Two phases with artificial variables; Dantzig pricing that falls back to
//! Bland's rule after a run of degenerate pivots, so the method cannot cycle.

use std::time::Instant;

use crate::model::{Model, Sense};

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Smallest pivot element accepted.
pub const PIVOT_TOL: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
pub const OPT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    LimitReached,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective value (meaningful when optimal).
    pub objective: f64,
    /// Values of the model variables.
    pub x: Vec<f64>,
    /// Row duals `y` with reduced costs `c - A^T y`.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LpLimits {
    pub max_iterations: Option<usize>,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
}

/// Constraint data of a model, reusable for solves under different bounds.
#[derive(Debug, Clone)]
pub struct LpProblem {
    n: usize,
    rows: Vec<Row>,
    cost: Vec<f64>,
    cost_constant: f64,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl LpProblem {
    pub fn from_model(m: &Model) -> Self {
        let mut cost = vec![0.0; m.variables.len()];
        for &(v, c) in &m.objective.terms {
            cost[v.0] += c;
        }
        Self {
            n: m.variables.len(),
            rows: m
                .constraints
                .iter()
                .map(|c| Row { terms: c.expr.terms.iter().map(|&(v, a)| (v.0, a)).collect(), sense: c.sense, rhs: c.rhs })
                .collect(),
            cost,
            cost_constant: m.objective.constant,
            lb: m.variables.iter().map(|v| v.lb).collect(),
            ub: m.variables.iter().map(|v| v.ub).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.cost_constant + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Solves with the problem's own bounds.
    pub fn solve(&self, limits: &LpLimits) -> LpOutcome {
        self.solve_with_bounds(&self.lb, &self.ub, limits)
    }

    pub fn solve_with_bounds(&self, lb: &[f64], ub: &[f64], limits: &LpLimits) -> LpOutcome {
        Tableau::build(self, lb, ub).map_or_else(
            |status| LpOutcome {
                status,
                objective: f64::INFINITY,
                x: vec![0.0; self.n],
                duals: vec![0.0; self.rows.len()],
                iterations: 0,
            },
            |t| t.run(self, limits),
        )
    }
}

/// How a structural column maps back to a model variable.
#[derive(Debug, Clone, Copy)]
struct ColOrigin {
    var: usize,
    sign: f64,
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m x width` matrix `B^{-1} A`.
    a: Vec<f64>,
    /// Values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    /// Column capacities (upper bounds after shifting lower bounds to 0).
    cap: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    n_struct: usize,
    first_art: usize,
    origins: Vec<ColOrigin>,
    /// Value of each model variable when all its columns are 0.
    base: Vec<f64>,
    /// Column that formed the initial identity for each row, and the row sign.
    unit_col: Vec<usize>,
    row_sign: Vec<f64>,
    kept_rows: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn build(p: &LpProblem, lb: &[f64], ub: &[f64]) -> Result<Self, LpStatus> {
        let mut base = vec![0.0; p.n];
        let mut col_of: Vec<Vec<usize>> = vec![Vec::new(); p.n];
        let mut origins = Vec::new();
        let mut cap = Vec::new();
        for j in 0..p.n {
            let (l, u) = (lb[j], ub[j]);
            if l > u + FEAS_TOL {
                return Err(LpStatus::Infeasible);
            }
            if l >= u {
                base[j] = l;
            } else if l.is_finite() {
                base[j] = l;
                col_of[j].push(origins.len());
                origins.push(ColOrigin { var: j, sign: 1.0 });
                cap.push(u - l);
            } else if u.is_finite() {
                base[j] = u;
                col_of[j].push(origins.len());
                origins.push(ColOrigin { var: j, sign: -1.0 });
                cap.push(f64::INFINITY);
            } else {
                for sign in [1.0, -1.0] {
                    col_of[j].push(origins.len());
                    origins.push(ColOrigin { var: j, sign });
                    cap.push(f64::INFINITY);
                }
            }
        }
        let n_struct = origins.len();

        // Shift right-hand sides; rows without free columns are checked directly.
        let mut kept = Vec::new();
        let mut rhs = Vec::new();
        for (r, row) in p.rows.iter().enumerate() {
            let shifted = row.rhs - row.terms.iter().map(|&(j, a)| a * base[j]).sum::<f64>();
            let has_cols = row.terms.iter().any(|&(j, a)| a != 0.0 && !col_of[j].is_empty());
            if !has_cols {
                let tol = FEAS_TOL * (1.0 + row.rhs.abs());
                let ok = match row.sense {
                    Sense::Le => shifted >= -tol,
                    Sense::Ge => shifted <= tol,
                    Sense::Eq => shifted.abs() <= tol,
                };
                if !ok {
                    return Err(LpStatus::Infeasible);
                }
                continue;
            }
            kept.push(r);
            rhs.push(shifted);
        }
        let m = kept.len();
        let n_slack = kept.iter().filter(|&&r| p.rows[r].sense != Sense::Eq).count();

        // Decide slack/artificial layout before allocating.
        let mut row_sign = vec![1.0; m];
        let mut slack_col = vec![usize::MAX; m];
        let mut slack_coef = vec![0.0; m];
        let mut next = n_struct;
        for (i, &r) in kept.iter().enumerate() {
            match p.rows[r].sense {
                Sense::Le => {
                    slack_col[i] = next;
                    slack_coef[i] = 1.0;
                    next += 1;
                }
                Sense::Ge => {
                    slack_col[i] = next;
                    slack_coef[i] = -1.0;
                    next += 1;
                }
                Sense::Eq => {}
            }
            if rhs[i] < 0.0 {
                row_sign[i] = -1.0;
            }
        }
        debug_assert_eq!(next, n_struct + n_slack);
        let first_art = next;
        let mut unit_col = vec![0; m];
        let mut n_art = 0;
        for i in 0..m {
            if slack_col[i] != usize::MAX && slack_coef[i] * row_sign[i] > 0.0 {
                unit_col[i] = slack_col[i];
            } else {
                unit_col[i] = first_art + n_art;
                n_art += 1;
            }
        }
        let width = first_art + n_art;
        cap.resize(width, f64::INFINITY);

        let mut a = vec![0.0; m * width];
        for (i, &r) in kept.iter().enumerate() {
            let row = &mut a[i * width..(i + 1) * width];
            let s = row_sign[i];
            for &(j, coef) in &p.rows[r].terms {
                for &c in &col_of[j] {
                    row[c] += s * coef * origins[c].sign;
                }
            }
            if slack_col[i] != usize::MAX {
                row[slack_col[i]] = s * slack_coef[i];
            }
            if unit_col[i] >= first_art {
                row[unit_col[i]] = 1.0;
            }
        }
        let beta: Vec<f64> = rhs.iter().zip(&row_sign).map(|(b, s)| b * s).collect();
        let mut is_basic = vec![false; width];
        for &c in &unit_col {
            is_basic[c] = true;
        }
        Ok(Self {
            m,
            width,
            a,
            beta,
            basis: unit_col.clone(),
            cap,
            at_upper: vec![false; width],
            is_basic,
            n_struct,
            first_art,
            origins,
            base,
            unit_col,
            row_sign,
            kept_rows: kept,
            iterations: 0,
        })
    }

    fn col_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.cap[j]
        } else {
            0.0
        }
    }

    /// Reduced costs `c - c_B B^{-1} A` for column costs `c`.
    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut d = c.to_vec();
        for r in 0..self.m {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * self.width..(r + 1) * self.width];
                for (dj, &arj) in d.iter_mut().zip(row) {
                    *dj -= cb * arj;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        let w = self.width;
        let piv = self.a[r * w + j];
        {
            let row = &mut self.a[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[j] = 1.0;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for other in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = other[j];
            if f != 0.0 {
                for (o, &pv) in other.iter_mut().zip(prow.iter()) {
                    *o -= f * pv;
                }
                other[j] = 0.0;
            }
        }
        let f = d[j];
        if f != 0.0 {
            for (dj, &pv) in d.iter_mut().zip(prow.iter()) {
                *dj -= f * pv;
            }
            d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// Runs the simplex loop for column costs `c`.
    fn optimize(&mut self, c: &[f64], limits: &LpLimits, iter_cap: usize) -> LpStatus {
        let mut d = self.reduced_costs(c);
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= iter_cap {
                return LpStatus::LimitReached;
            }
            if self.iterations % 64 == 0 && limits.deadline.is_some_and(|t| Instant::now() >= t) {
                return LpStatus::LimitReached;
            }
            let bland = degenerate_run >= DEGENERATE_RUN;

            // Pricing.
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..self.width {
                if self.is_basic[j] || self.cap[j] <= 0.0 {
                    continue;
                }
                let dj = d[j];
                let improving = if self.at_upper[j] { dj > OPT_TOL } else { dj < -OPT_TOL };
                if !improving {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some(j);
                }
            }
            let Some(j) = enter else { return LpStatus::Optimal };
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            // Ratio test.
            let mut theta = self.cap[j];
            let mut leave: Option<usize> = None;
            let mut leave_alpha = 0.0f64;
            for r in 0..self.m {
                let delta = dir * self.a[r * self.width + j];
                let bv = self.basis[r];
                let ratio = if delta > PIVOT_TOL {
                    self.beta[r].max(0.0) / delta
                } else if delta < -PIVOT_TOL && self.cap[bv].is_finite() {
                    (self.cap[bv] - self.beta[r]).max(0.0) / -delta
                } else {
                    continue;
                };
                let better = if ratio < theta - 1e-12 {
                    true
                } else if ratio <= theta + 1e-12 {
                    // Ties: prefer a bound flip, then Bland's or the largest pivot.
                    match leave {
                        Some(lr) if bland => bv < self.basis[lr],
                        Some(_) => delta.abs() > leave_alpha,
                        None => false,
                    }
                } else {
                    false
                };
                if better {
                    theta = ratio;
                    leave = Some(r);
                    leave_alpha = delta.abs();
                }
            }
            if theta.is_infinite() {
                return LpStatus::Unbounded;
            }
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            for r in 0..self.m {
                let delta = dir * self.a[r * self.width + j];
                if delta != 0.0 {
                    self.beta[r] -= theta * delta;
                }
            }
            let entering_value = self.col_value(j) + dir * theta;
            match leave {
                None => {
                    // Bound flip of the entering column.
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some(r) => {
                    let bv = self.basis[r];
                    let delta = dir * self.a[r * self.width + j];
                    self.at_upper[bv] = delta < 0.0;
                    self.at_upper[j] = false;
                    self.pivot(r, j, &mut d);
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn run(mut self, p: &LpProblem, limits: &LpLimits) -> LpOutcome {
        let iter_cap = limits.max_iterations.unwrap_or(50 * (self.m + self.width) + 10_000);
        let n_art = self.width - self.first_art;
        let fail = |status: LpStatus, t: &Tableau| LpOutcome {
            status,
            objective: f64::INFINITY,
            x: vec![0.0; p.n],
            duals: vec![0.0; p.rows.len()],
            iterations: t.iterations,
        };

        if n_art > 0 {
            let mut c1 = vec![0.0; self.width];
            for c in c1.iter_mut().skip(self.first_art) {
                *c = 1.0;
            }
            match self.optimize(&c1, limits, iter_cap) {
                LpStatus::Optimal => {}
                LpStatus::Unbounded => unreachable!("phase 1 objective is bounded below"),
                s => return fail(s, &self),
            }
            let infeas: f64 = (0..self.m).filter(|&r| self.basis[r] >= self.first_art).map(|r| self.beta[r]).sum();
            let scale = 1.0 + self.beta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeas > FEAS_TOL * scale {
                return fail(LpStatus::Infeasible, &self);
            }
            for c in self.cap.iter_mut().skip(self.first_art) {
                *c = 0.0;
            }
            // Drive remaining artificials out of the basis where possible.
            let mut dummy = vec![0.0; self.width];
            for r in 0..self.m {
                if self.basis[r] < self.first_art {
                    continue;
                }
                let row = &self.a[r * self.width..(r + 1) * self.width];
                let pick = (0..self.first_art)
                    .filter(|&j| !self.is_basic[j])
                    .max_by(|&x, &y| row[x].abs().total_cmp(&row[y].abs()))
                    .filter(|&j| row[j].abs() > 1e-7);
                if let Some(j) = pick {
                    let value = self.col_value(j);
                    let old = self.beta[r];
                    let alpha = self.a[r * self.width + j];
                    // Move the artificial to 0 by shifting the entering column.
                    let shift = old / alpha;
                    for rr in 0..self.m {
                        let ar = self.a[rr * self.width + j];
                        if ar != 0.0 {
                            self.beta[rr] -= shift * ar;
                        }
                    }
                    self.at_upper[j] = false;
                    self.pivot(r, j, &mut dummy);
                    self.beta[r] = value + shift;
                } else {
                    self.beta[r] = 0.0;
                }
            }
        }

        let mut c2 = vec![0.0; self.width];
        for (col, o) in self.origins.iter().enumerate() {
            c2[col] = p.cost[o.var] * o.sign;
        }
        let status = self.optimize(&c2, limits, iter_cap);
        if status != LpStatus::Optimal {
            return fail(status, &self);
        }

        let mut colv = vec![0.0; self.width];
        for j in 0..self.width {
            if !self.is_basic[j] {
                colv[j] = self.col_value(j);
            }
        }
        for r in 0..self.m {
            colv[self.basis[r]] = self.beta[r];
        }
        let mut x = self.base.clone();
        for (col, o) in self.origins.iter().enumerate().take(self.n_struct) {
            x[o.var] += o.sign * colv[col];
        }
        let mut duals = vec![0.0; p.rows.len()];
        for i in 0..self.m {
            let uc = self.unit_col[i];
            let y: f64 = (0..self.m).map(|r| c2[self.basis[r]] * self.a[r * self.width + uc]).sum();
            duals[self.kept_rows[i]] = y * self.row_sign[i];
        }
        LpOutcome { status: LpStatus::Optimal, objective: p.objective_at(&x), x, duals, iterations: self.iterations }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinExpr, Model, Sense, Tag};

    fn solve(m: &Model) -> LpOutcome {
        LpProblem::from_model(m).solve(&LpLimits::default())
    }

    #[test]
    fn single_lower_bound_row() {
        let mut m = Model::new("t");
        let x = m.continuous("x", 0.0, f64::INFINITY).unwrap();
        m.add_constraint(LinExpr::var(x), Sense::Ge, 3.0, Tag::PANdemand).unwrap();
        m.set_objective(LinExpr::var(x)).unwrap();
        let out = solve(&m);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 3.0).abs() < 1e-12);
        assert!((out.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merit_order_dispatch() {
        let mut m = Model::new("t");
        let a = m.continuous("a", 0.0, 60.0).unwrap();
        let b = m.continuous("b", 0.0, 60.0).unwrap();
        m.add_constraint(LinExpr::var(a).term(b, 1.0), Sense::Eq, 100.0, Tag::PANdemand).unwrap();
        m.set_objective(LinExpr::var(a).term(b, 2.0)).unwrap();
        let out = solve(&m);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 140.0).abs() < 1e-9);
        assert!((out.x[0] - 60.0).abs() < 1e-9);
    }

    #[test]
    fn capacity_shortfall_is_infeasible() {
        let mut m = Model::new("t");
        let a = m.continuous("a", 0.0, 40.0).unwrap();
        let b = m.continuous("b", 0.0, 40.0).unwrap();
        m.add_constraint(LinExpr::var(a).term(b, 1.0), Sense::Eq, 100.0, Tag::PANdemand).unwrap();
        m.set_objective(LinExpr::var(a)).unwrap();
        assert_eq!(solve(&m).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut m = Model::new("t");
        let a = m.continuous("a", 0.0, f64::INFINITY).unwrap();
        let b = m.continuous("b", 0.0, f64::INFINITY).unwrap();
        m.add_constraint(LinExpr::var(a).term(b, -1.0), Sense::Le, 1.0, Tag::PANdemand).unwrap();
        m.set_objective(LinExpr::var(a).term(b, -2.0)).unwrap();
        assert_eq!(solve(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_negative_variables() {
        // min x + y, x free, y <= -1, x + y >= -5, x - y <= 2
        let mut m = Model::new("t");
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let y = m.continuous("y", f64::NEG_INFINITY, -1.0).unwrap();
        m.add_constraint(LinExpr::var(x).term(y, 1.0), Sense::Ge, -5.0, Tag::PANdemand).unwrap();
        m.add_constraint(LinExpr::var(x).term(y, -1.0), Sense::Le, 2.0, Tag::PANdemand).unwrap();
        m.set_objective(LinExpr::var(x).term(y, 1.0)).unwrap();
        let out = solve(&m);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective + 5.0).abs() < 1e-9);
        assert!(m.max_violation(&out.x) < 1e-9);
    }

    #[test]
    fn constant_row_violation_is_infeasible() {
        let mut m = Model::new("t");
        let x = m.continuous("x", 2.0, 2.0).unwrap();
        m.add_constraint(LinExpr::var(x), Sense::Ge, 3.0, Tag::PANdemand).unwrap();
        assert_eq!(solve(&m).status, LpStatus::Infeasible);
    }
}
