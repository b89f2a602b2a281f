//! MIP builders: the step-variable model v0, its light stretch extension,
//! and the outage relaxations v3 and v3(k0).

mod exact;
mod light;
mod mapping;
mod schedule;
mod steps;
mod v3;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use exact::{build_v0, build_v3_k0};
pub use light::add_light_ct6;
pub use mapping::{map_v0_to_v3, map_v0_to_v3_k0};
pub use schedule::{build_schedule_constraints, schedule_lhs};
pub use steps::{DRef, StepVars};
pub use v3::{build_v3, v3_delta, v3_k0_delta};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::Model;
use crate::preprocess::{tighten_time_windows, TightenedWindows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    V0,
    V3,
    V3k,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::V0 => "v0",
            Formulation::V3 => "v3",
            Formulation::V3k => "v3k",
        })
    }
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v0" => Ok(Formulation::V0),
            "v3" => Ok(Formulation::V3),
            "v3k" => Ok(Formulation::V3k),
            _ => Err(Error::Argument(format!("unknown formulation {s:?} (expected v0, v3 or v3k)"))),
        }
    }
}

/// Light stretch rows added on top of v0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ct6Mode {
    Off,
    /// One cap row per cycle and profile segment.
    PerCycle,
    /// Caps on the summed cycle production; profiles must not depend on `k`.
    Shared,
}

impl fmt::Display for Ct6Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ct6Mode::Off => "off",
            Ct6Mode::PerCycle => "per-cycle",
            Ct6Mode::Shared => "shared",
        })
    }
}

impl FromStr for Ct6Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Ct6Mode::Off),
            "per-cycle" | "per_cycle" => Ok(Ct6Mode::PerCycle),
            "shared" => Ok(Ct6Mode::Shared),
            _ => Err(Error::Argument(format!("unknown ct6 mode {s:?} (expected off, per-cycle or shared)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RelaxationConfig {
    pub formulation: Formulation,
    /// Last exactly modelled cycle, used by `v3k`.
    pub k0: usize,
    pub ct6: Ct6Mode,
    /// Replace stock variables by their closed-form expressions.
    pub eliminate_stocks: bool,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self { formulation: Formulation::V0, k0: 0, ct6: Ct6Mode::Off, eliminate_stocks: false }
    }
}

impl RelaxationConfig {
    pub fn v0() -> Self {
        Self::default()
    }

    pub fn v3() -> Self {
        Self { formulation: Formulation::V3, ..Self::default() }
    }

    pub fn v3k(k0: usize) -> Self {
        Self { formulation: Formulation::V3k, k0, ..Self::default() }
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.ct6 != Ct6Mode::Off && self.formulation != Formulation::V0 {
            return Err(Error::Argument("light CT6 rows extend v0 only".into()));
        }
        if self.formulation == Formulation::V3k {
            let kmax = inst.t2.iter().map(|u| u.last_cycle()).max().unwrap_or(0);
            if self.k0 > kmax {
                return Err(Error::Argument(format!("k0 = {} exceeds the last cycle index {kmax}", self.k0)));
            }
        }
        Ok(())
    }
}

/// Builds the model selected by `cfg` on already tightened windows.
pub fn build_model(inst: &Instance, windows: &TightenedWindows, cfg: &RelaxationConfig) -> Result<Model> {
    cfg.check(inst)?;
    let mut m = match cfg.formulation {
        Formulation::V0 => build_v0(inst, windows, cfg.eliminate_stocks)?,
        Formulation::V3 => build_v3(inst, windows)?,
        Formulation::V3k => build_v3_k0(inst, windows, cfg.k0, cfg.eliminate_stocks)?,
    };
    if cfg.ct6 != Ct6Mode::Off {
        add_light_ct6(&mut m, inst, windows, cfg.ct6)?;
    }
    Ok(m)
}

/// Tightens the time windows, then builds.
pub fn build(inst: &Instance, cfg: &RelaxationConfig) -> Result<Model> {
    let windows = tighten_time_windows(inst)?;
    build_model(inst, &windows, cfg)
}
