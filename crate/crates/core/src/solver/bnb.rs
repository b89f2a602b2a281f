//! LP-based best-bound branch-and-bound for models with binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::simplex::{LpLimits, LpProblem, LpStatus};
use super::{SolveResult, SolveStatus};
use crate::model::{Model, VarKind};

/// Distance to an integer below which a binary counts as integral.
pub const INT_TOL: f64 = 1e-6;
/// Relative gap at which a node is pruned against the incumbent.
pub const REL_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default)]
pub struct MipLimits {
    /// Maximum number of LP relaxations solved.
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
}

struct Node {
    bound: f64,
    id: usize,
    /// Binary fixings `(variable, value)` from the root.
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound, then the oldest node, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

fn prune_level(incumbent: f64) -> f64 {
    incumbent - REL_GAP * incumbent.abs().max(1.0)
}

/// Solves the model to optimality or until a limit is hit. The reported
/// dual bound is valid at any stopping point.
pub fn solve_mip(m: &Model, limits: &MipLimits) -> SolveResult {
    let start = Instant::now();
    let lp = LpProblem::from_model(m);
    let binaries: Vec<usize> = (0..m.variables.len()).filter(|&j| m.variables[j].kind == VarKind::Binary).collect();
    let deadline = limits.time_limit.map(|d| start + d);
    let lp_limits = LpLimits { deadline, ..Default::default() };

    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, id: 0, fixings: Vec::new() });
    let mut next_id = 1;
    let mut nodes = 0usize;
    let mut incumbent = f64::INFINITY;
    let mut best_x: Option<Vec<f64>> = None;
    let mut limit_hit = false;
    let mut unbounded = false;

    while let Some(node) = heap.peek() {
        if node.bound >= prune_level(incumbent) {
            heap.clear();
            break;
        }
        if limits.node_limit.is_some_and(|n| nodes >= n) || deadline.is_some_and(|d| Instant::now() >= d) {
            limit_hit = true;
            break;
        }
        let node = heap.pop().expect("peeked");
        let (mut lb, mut ub) = (lp.lb.clone(), lp.ub.clone());
        for &(j, v) in &node.fixings {
            lb[j] = v;
            ub[j] = v;
        }
        nodes += 1;
        let out = lp.solve_with_bounds(&lb, &ub, &lp_limits);
        match out.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                unbounded = true;
                break;
            }
            LpStatus::LimitReached => {
                heap.push(node);
                limit_hit = true;
                break;
            }
            LpStatus::Optimal => {}
        }
        let bound = out.objective.max(node.bound);
        if bound >= prune_level(incumbent) {
            continue;
        }
        // Most fractional binary, lowest index on ties.
        let mut branch: Option<(usize, f64)> = None;
        for &j in &binaries {
            let frac = (out.x[j] - out.x[j].round()).abs();
            if frac > INT_TOL && branch.is_none_or(|(_, f)| frac > f + 1e-12) {
                branch = Some((j, frac));
            }
        }
        match branch {
            None => {
                let mut x = out.x;
                for &j in &binaries {
                    x[j] = x[j].round();
                }
                incumbent = out.objective;
                best_x = Some(x);
            }
            Some((j, _)) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node { bound, id: next_id, fixings });
                    next_id += 1;
                }
            }
        }
    }

    let elapsed = start.elapsed();
    if unbounded {
        return SolveResult::new(SolveStatus::Unbounded, f64::NEG_INFINITY, f64::NEG_INFINITY, None, nodes, elapsed);
    }
    let open_min = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let dual = open_min.min(incumbent);
    if limit_hit && !heap.is_empty() {
        return SolveResult::new(SolveStatus::LimitReached, incumbent, dual, best_x, nodes, elapsed);
    }
    match best_x {
        Some(x) => SolveResult::new(SolveStatus::Optimal, incumbent, incumbent, Some(x), nodes, elapsed),
        None => SolveResult::new(SolveStatus::Infeasible, f64::INFINITY, f64::INFINITY, None, nodes, elapsed),
    }
}

/// Solves the continuous relaxation.
pub fn solve_lp(m: &Model) -> SolveResult {
    let start = Instant::now();
    let out = LpProblem::from_model(m).solve(&LpLimits::default());
    let elapsed = start.elapsed();
    match out.status {
        LpStatus::Optimal => {
            SolveResult::new(SolveStatus::Optimal, out.objective, out.objective, Some(out.x), 1, elapsed)
        }
        LpStatus::Infeasible => SolveResult::new(SolveStatus::Infeasible, f64::INFINITY, f64::INFINITY, None, 1, elapsed),
        LpStatus::Unbounded => {
            SolveResult::new(SolveStatus::Unbounded, f64::NEG_INFINITY, f64::NEG_INFINITY, None, 1, elapsed)
        }
        LpStatus::LimitReached => {
            SolveResult::new(SolveStatus::LimitReached, f64::INFINITY, f64::NEG_INFINITY, None, 1, elapsed)
        }
    }
}
