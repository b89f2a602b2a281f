//! Canonical instance file: a `fbinst/1` header line followed by a TOML
//! document with top-level keys `grid`, `t1`, `t2`, `scenarios` and
//! `constraints`. See `docs/instance-format.md` for the schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate_instance, Instance, Scenario, ScheduleConstraint, T1Unit, T2Unit, TimeGrid};
use crate::error::{Error, Result};

pub const FORMAT_HEADER: &str = "fbinst/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(default = "one")]
    first_stage_weight: f64,
    grid: RawGrid,
    #[serde(default)]
    t1: Vec<T1Unit>,
    #[serde(default)]
    t2: Vec<T2Unit>,
    scenarios: Vec<RawScenario>,
    #[serde(default)]
    constraints: Vec<ScheduleConstraint>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    weeks: usize,
    step_duration: Vec<f64>,
    #[serde(default)]
    fuel_factor: Option<Vec<f64>>,
    #[serde(default)]
    step_to_week: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    weight: Option<f64>,
    demand: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

/// Parses and validates an instance from text.
pub fn parse_instance_str(text: &str) -> Result<Instance> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    if header.trim_end() != FORMAT_HEADER {
        return Err(Error::Syntax {
            line: 1,
            column: 1,
            message: format!("expected header line `{FORMAT_HEADER}`"),
        });
    }
    let raw: RawInstance = toml::from_str(body).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |sp| line_col(body, sp.start));
        Error::Syntax { line: line + 1, column, message: e.message().trim().to_string() }
    })?;

    let steps = raw.grid.step_duration.len();
    let weeks = raw.grid.weeks;
    let step_to_week = match raw.grid.step_to_week {
        Some(v) => v,
        None if weeks > 0 && steps % weeks == 0 => (0..steps).map(|t| t / (steps / weeks) + 1).collect(),
        None => {
            return Err(Error::Semantic(vec![crate::error::Violation::new(
                "grid.step_to_week",
                "omitted but steps are not a multiple of weeks",
            )]))
        }
    };
    let n_scen = raw.scenarios.len();
    let scenarios = raw
        .scenarios
        .into_iter()
        .map(|s| Scenario {
            weight: s.weight.unwrap_or(raw.first_stage_weight / n_scen as f64),
            demand: s.demand,
        })
        .collect();
    let inst = Instance {
        grid: TimeGrid {
            fuel_factor: raw.grid.fuel_factor.unwrap_or_else(|| raw.grid.step_duration.clone()),
            step_duration: raw.grid.step_duration,
            step_to_week,
            weeks,
        },
        t1: raw.t1,
        t2: raw.t2,
        scenarios,
        constraints: raw.constraints,
        first_stage_weight: raw.first_stage_weight,
    };
    let violations = validate_instance(&inst);
    if violations.is_empty() {
        Ok(inst)
    } else {
        Err(Error::Semantic(violations))
    }
}

pub fn parse_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instance_str(&text)
}

/// Serialises an instance; every field is written explicitly.
pub fn write_instance_string(inst: &Instance) -> String {
    let raw = RawInstance {
        first_stage_weight: inst.first_stage_weight,
        grid: RawGrid {
            weeks: inst.grid.weeks,
            step_duration: inst.grid.step_duration.clone(),
            fuel_factor: Some(inst.grid.fuel_factor.clone()),
            step_to_week: Some(inst.grid.step_to_week.clone()),
        },
        t1: inst.t1.clone(),
        t2: inst.t2.clone(),
        scenarios: inst
            .scenarios
            .iter()
            .map(|s| RawScenario { weight: Some(s.weight), demand: s.demand.clone() })
            .collect(),
        constraints: inst.constraints.clone(),
    };
    let body = toml::to_string(&raw).expect("instance data is always representable in TOML");
    format!("{FORMAT_HEADER}\n{body}")
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_instance_string(inst)).map_err(|e| Error::io(path, e))
}
