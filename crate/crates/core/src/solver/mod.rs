//! Exact desk-scale optimisation and bound bookkeeping.

pub mod bnb;
pub mod external;
pub mod ledger;
pub mod simplex;

use std::time::Duration;

use serde::Serialize;

pub use bnb::{solve_lp, solve_mip, MipLimits};
pub use external::{external_solve, AdapterConfig};
pub use ledger::{combine_bounds, BoundLedger, LedgerEntry};
pub use simplex::{LpLimits, LpOutcome, LpProblem, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    LimitReached,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best primal value found (`+inf` when none).
    pub primal: f64,
    /// Valid lower bound on the optimum.
    pub dual_bound: f64,
    pub solution: Option<Vec<f64>>,
    /// Number of LP relaxations solved.
    pub nodes: usize,
    pub elapsed: Duration,
    /// `internal` or `external:<program>`.
    pub provenance: String,
}

impl SolveResult {
    pub fn new(
        status: SolveStatus,
        primal: f64,
        dual_bound: f64,
        solution: Option<Vec<f64>>,
        nodes: usize,
        elapsed: Duration,
    ) -> Self {
        Self { status, primal, dual_bound, solution, nodes, elapsed, provenance: "internal".into() }
    }
}
