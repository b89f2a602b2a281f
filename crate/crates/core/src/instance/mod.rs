//! Problem data: time grid, flexible (T1) and nuclear (T2) units, scenarios
//! and the scheduling constraints linking outage dates.
//!
//! Conventions used across the crate:
//! - production steps `t` are 0-based, weeks `w` are 1-based (`1..=W`);
//! - T2 cycles are indexed `k = 0..=K`, cycle 0 being the initial cycle whose
//!   start week is fixed (`cycles[0].earliest_start`, possibly `<= 0`);
//! - an outage `k >= 1` whose `latest_start` is absent or beyond the horizon
//!   is optional: it may not take place at all.

mod format;
mod generate;
mod validate;

pub use format::{parse_instance, parse_instance_str, write_instance, write_instance_string, FORMAT_HEADER};
pub use generate::{generate_synthetic, Dims};
pub use validate::validate_instance;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Duration `D^t` of each production step, in hours.
    pub step_duration: Vec<f64>,
    /// Power-to-fuel conversion `F_t` of each step.
    pub fuel_factor: Vec<f64>,
    /// Week (1-based) containing each step.
    pub step_to_week: Vec<usize>,
    pub weeks: usize,
}

impl TimeGrid {
    /// Homogeneous grid: `steps_per_week` steps of equal duration per week.
    pub fn uniform(weeks: usize, steps_per_week: usize, step_duration: f64) -> Self {
        let steps = weeks * steps_per_week;
        Self {
            step_duration: vec![step_duration; steps],
            fuel_factor: vec![step_duration; steps],
            step_to_week: (0..steps).map(|t| t / steps_per_week + 1).collect(),
            weeks,
        }
    }

    pub fn steps(&self) -> usize {
        self.step_duration.len()
    }

    pub fn week_of(&self, t: usize) -> usize {
        self.step_to_week[t]
    }

    /// Steps of week `w` (1-based), as a half-open range of step indices.
    pub fn steps_in_week(&self, w: usize) -> std::ops::Range<usize> {
        let start = self.step_to_week.partition_point(|&x| x < w);
        let end = self.step_to_week.partition_point(|&x| x <= w);
        start..end
    }

    /// First step `t_w` of week `w`.
    pub fn week_first_step(&self, w: usize) -> usize {
        self.steps_in_week(w).start
    }

    /// Largest weekly fuel burn per unit of power, `max_w sum_{t in w} F_t`.
    pub fn max_week_fuel_factor(&self) -> f64 {
        (1..=self.weeks)
            .map(|w| self.steps_in_week(w).map(|t| self.fuel_factor[t]).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Flexible unit. Data is indexed `[scenario][step]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Unit {
    pub name: String,
    pub cost: Vec<Vec<f64>>,
    pub min_power: Vec<Vec<f64>>,
    pub max_power: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    /// Outage duration `Da` in weeks.
    pub outage_weeks: i64,
    /// First allowed start week `To`. For cycle 0 this is the fixed start.
    pub earliest_start: i64,
    /// Last allowed start week `Ta`; `None` leaves the outage optional.
    pub latest_start: Option<i64>,
    pub refuel_min: f64,
    pub refuel_max: f64,
    /// `S_{i,k}`.
    pub max_stock: f64,
    /// `Amax_{i,k}`: stock allowed at the end of this cycle for the next outage to happen.
    pub max_residual: f64,
    /// `Bo_{i,k}`: stock level below which the stretch profile applies.
    pub threshold: f64,
    /// `Q_{i,k}`: refuel retention factor.
    pub retention: f64,
    pub refuel_cost: f64,
    /// Stretch profile points `(f_m, c_m)`, stock levels strictly decreasing.
    pub profile: Vec<(f64, f64)>,
}

impl CycleSpec {
    /// `(Q - 1) / Q`.
    pub fn loss_factor(&self) -> f64 {
        (self.retention - 1.0) / self.retention
    }

    /// Slope and intercept of every profile segment line `Y = a X + b`.
    pub fn profile_lines(&self) -> Vec<(f64, f64)> {
        self.profile
            .windows(2)
            .map(|seg| {
                let (f0, c0) = seg[0];
                let (f1, c1) = seg[1];
                let slope = (c0 - c1) / (f0 - f1);
                (slope, c1 - slope * f1)
            })
            .collect()
    }

    /// Concave cap on the power ratio at stock `x` (minimum of the segment lines).
    pub fn stretch_cap(&self, x: f64) -> f64 {
        self.profile_lines().iter().map(|(a, b)| a * x + b).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T2Unit {
    pub name: String,
    /// `Xi_i`.
    pub initial_stock: f64,
    /// `C_i`, value of a unit of fuel left at the end of the horizon.
    pub final_stock_value: f64,
    /// `P̄_i^t`.
    pub max_power: Vec<f64>,
    pub cycles: Vec<CycleSpec>,
}

impl T2Unit {
    /// Highest cycle index `K`.
    pub fn last_cycle(&self) -> usize {
        self.cycles.len() - 1
    }

    /// `S̄_i = max_k S_{i,k}`.
    pub fn max_stock(&self) -> f64 {
        self.cycles.iter().map(|c| c.max_stock).fold(0.0, f64::max)
    }

    pub fn peak_power(&self) -> f64 {
        self.max_power.iter().copied().fold(0.0, f64::max)
    }

    pub fn initial_start_week(&self) -> i64 {
        self.cycles[0].earliest_start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Probability `π_s`.
    pub weight: f64,
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintKind {
    CT14,
    CT15,
    CT16,
    CT17,
    CT18,
    CT19,
    CT20,
    CT21,
}

/// Reference to outage `(unit, cycle)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutageRef(pub usize, pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConstraint {
    pub kind: ConstraintKind,
    pub outages: Vec<OutageRef>,
    /// Spacing `Se` (CT14-CT18), in weeks.
    #[serde(default)]
    pub spacing: i64,
    /// Active weeks `[U, V]` (CT15, CT21). `None` means the whole horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(i64, i64)>,
    /// CT19 per-member resource offsets `L19`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resource_offset: Vec<i64>,
    /// CT19 per-member usage lengths `Tu19`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resource_length: Vec<i64>,
    /// Right-hand side: one value for CT19 (`Q19`), one per week for CT20 (`N20_w`) and CT21 (`Imax_w`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capacity: Vec<f64>,
}

impl ScheduleConstraint {
    /// Right-hand side at week `w`.
    pub fn rhs(&self, w: usize) -> f64 {
        match self.kind {
            ConstraintKind::CT19 => self.capacity.first().copied().unwrap_or(1.0),
            ConstraintKind::CT20 | ConstraintKind::CT21 => self.capacity[w - 1],
            _ => 1.0,
        }
    }

    pub fn applies_to_week(&self, w: usize) -> bool {
        match self.window {
            Some((u, v)) => (u..=v).contains(&(w as i64)),
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub grid: TimeGrid,
    pub t1: Vec<T1Unit>,
    pub t2: Vec<T2Unit>,
    pub scenarios: Vec<Scenario>,
    pub constraints: Vec<ScheduleConstraint>,
    /// Multiplier of first-stage (refuel) costs; equals the total scenario
    /// weight, 1 for a full instance.
    pub first_stage_weight: f64,
}

impl Instance {
    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn weeks(&self) -> usize {
        self.grid.weeks
    }

    pub fn cycle(&self, o: OutageRef) -> &CycleSpec {
        &self.t2[o.0].cycles[o.1]
    }

    /// Whether outage `(i,k)`, `k >= 1`, must start inside the horizon.
    pub fn is_mandatory(&self, o: OutageRef) -> bool {
        o.1 > 0 && self.cycle(o).latest_start.is_some_and(|ta| ta <= self.weeks() as i64)
    }

    /// All outages `(i,k)` with `k >= 1`, in unit-major order.
    pub fn outages(&self) -> impl Iterator<Item = OutageRef> + '_ {
        self.t2
            .iter()
            .enumerate()
            .flat_map(|(i, u)| (1..u.cycles.len()).map(move |k| OutageRef(i, k)))
    }
}
