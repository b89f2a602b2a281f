use serde::Serialize;

use crate::error::{Error, Result};

/// Dual bound of one sub-problem of a scenario decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    /// Scenario indices (0-based) covered by the sub-problem.
    pub scope: Vec<usize>,
    /// Multiplier applied to `bound` in the combination.
    pub weight: f64,
    pub bound: f64,
    pub formulation: String,
    pub k0: Option<usize>,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundLedger {
    pub entries: Vec<LedgerEntry>,
    /// `sum weight * bound`: a lower bound of the full stochastic problem.
    pub combined: f64,
}

/// Combines sub-problem bounds whose scopes partition `0..n_scenarios`.
///
/// Entries are summed in scope order, so the result does not depend on the
/// order in which the sub-solves finished.
pub fn combine_bounds(n_scenarios: usize, mut entries: Vec<LedgerEntry>) -> Result<BoundLedger> {
    let mut owner: Vec<Option<usize>> = vec![None; n_scenarios];
    for (e, entry) in entries.iter().enumerate() {
        if entry.scope.is_empty() {
            return Err(Error::Partition(format!("entry {e} covers no scenario")));
        }
        for &s in &entry.scope {
            let slot = owner
                .get_mut(s)
                .ok_or_else(|| Error::Partition(format!("scenario {} out of range 1..={n_scenarios}", s + 1)))?;
            if let Some(prev) = slot {
                return Err(Error::Partition(format!("scenario {} covered by entries {prev} and {e}", s + 1)));
            }
            *slot = Some(e);
        }
    }
    if let Some(s) = owner.iter().position(Option::is_none) {
        return Err(Error::Partition(format!("scenario {} is not covered", s + 1)));
    }
    for e in &mut entries {
        e.scope.sort_unstable();
    }
    entries.sort_by_key(|e| e.scope[0]);
    let combined = entries.iter().map(|e| e.weight * e.bound).sum();
    Ok(BoundLedger { entries, combined })
}
