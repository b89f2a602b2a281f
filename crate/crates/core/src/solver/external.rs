//! Runs an MPS-capable solver as a child process and parses its output.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use regex::Regex;
use serde::Deserialize;

use super::{SolveResult, SolveStatus};
use crate::error::{Error, Result};

/// Overrides `executable` from the config file when set.
pub const SOLVER_ENV: &str = "FBOUND_SOLVER";

/// How to call one external solver and read its answer.
///
/// ```toml
/// executable = "cbc"
/// args = ["{mps}", "solve", "quit"]
/// objective = 'Objective value:\s+(\S+)'
/// bound = 'best possible\s+(\S+)'
/// optimal = 'Optimal solution found'
/// infeasible = 'infeasible'
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterConfig {
    pub executable: String,
    /// Argument template; `{mps}` is replaced by the model path.
    #[serde(default = "default_args")]
    pub args: Vec<String>,
    /// Regex whose first capture group is the primal objective.
    pub objective: String,
    /// Regex whose first capture group is the dual bound.
    #[serde(default)]
    pub bound: Option<String>,
    #[serde(default)]
    pub optimal: Option<String>,
    #[serde(default)]
    pub infeasible: Option<String>,
    #[serde(default)]
    pub limit: Option<String>,
}

fn default_args() -> Vec<String> {
    vec!["{mps}".into()]
}

impl AdapterConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::External(format!("bad adapter config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn program(&self) -> String {
        std::env::var(SOLVER_ENV).ok().filter(|s| !s.is_empty()).unwrap_or_else(|| self.executable.clone())
    }
}

fn compile(pattern: &str) -> Result<Regex> {
    Regex::new(pattern).map_err(|e| Error::External(format!("bad pattern {pattern:?}: {e}")))
}

fn capture_number(pattern: &str, text: &str, what: &str) -> Result<Option<f64>> {
    let re = compile(pattern)?;
    let Some(caps) = re.captures(text) else { return Ok(None) };
    let raw = caps
        .get(1)
        .ok_or_else(|| Error::External(format!("{what} pattern has no capture group")))?
        .as_str();
    raw.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::External(format!("cannot parse {what} from {raw:?}")))
}

fn matches(pattern: &Option<String>, text: &str) -> Result<bool> {
    match pattern {
        Some(p) => Ok(compile(p)?.is_match(text)),
        None => Ok(false),
    }
}

/// Parses a solver transcript according to `cfg`.
pub fn parse_output(cfg: &AdapterConfig, text: &str) -> Result<(SolveStatus, f64, f64)> {
    if matches(&cfg.infeasible, text)? {
        return Ok((SolveStatus::Infeasible, f64::INFINITY, f64::INFINITY));
    }
    let objective = capture_number(&cfg.objective, text, "objective")?;
    let bound = match &cfg.bound {
        Some(p) => capture_number(p, text, "bound")?,
        None => None,
    };
    let status = if matches(&cfg.optimal, text)? {
        SolveStatus::Optimal
    } else if matches(&cfg.limit, text)? {
        SolveStatus::LimitReached
    } else if cfg.optimal.is_none() && objective.is_some() {
        SolveStatus::Optimal
    } else {
        return Err(Error::External("solver output carries no recognised status".into()));
    };
    match (status, objective, bound) {
        (SolveStatus::Optimal, Some(obj), b) => Ok((status, obj, b.unwrap_or(obj))),
        (SolveStatus::LimitReached, obj, Some(b)) => Ok((status, obj.unwrap_or(f64::INFINITY), b)),
        (SolveStatus::LimitReached, _, None) => {
            Err(Error::External("limit reached but no dual bound could be parsed".into()))
        }
        _ => Err(Error::External("no objective value found in solver output".into())),
    }
}

/// Solves the MPS file with the configured program.
pub fn external_solve(mps_path: impl AsRef<Path>, cfg: &AdapterConfig) -> Result<SolveResult> {
    let mps_path = mps_path.as_ref();
    let program = cfg.program();
    let mps = mps_path.to_string_lossy();
    let args: Vec<String> = cfg.args.iter().map(|a| a.replace("{mps}", &mps)).collect();
    let start = Instant::now();
    let output = Command::new(&program)
        .args(&args)
        .output()
        .map_err(|e| Error::External(format!("cannot run {program}: {e}")))?;
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&output.stdout);
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(Error::External(format!("{program} exited with {}: {}", output.status, stderr.trim())));
    }
    let (status, primal, dual) = parse_output(cfg, &stdout)?;
    let mut r = SolveResult::new(status, primal, dual, None, 0, elapsed);
    r.provenance = format!("external:{program}");
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> AdapterConfig {
        AdapterConfig::from_toml_str(
            r#"
executable = "sh"
args = ["-c", "echo 'status: optimal'; echo 'objective = 12.5'"]
objective = 'objective = (\S+)'
optimal = 'status: optimal'
infeasible = 'status: infeasible'
"#,
        )
        .unwrap()
    }

    #[test]
    fn stub_adapter_is_parsed() {
        let r = external_solve("unused.mps", &cfg()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.primal, 12.5);
        assert_eq!(r.dual_bound, 12.5);
        assert_eq!(r.provenance, "external:sh");
    }

    #[test]
    fn malformed_output_is_an_error() {
        assert!(parse_output(&cfg(), "status: optimal\nobjective = abc").is_err());
        assert!(parse_output(&cfg(), "nothing useful").is_err());
    }

    #[test]
    fn infeasible_and_limit() {
        let c = cfg();
        assert_eq!(parse_output(&c, "status: infeasible").unwrap().0, SolveStatus::Infeasible);
        let mut c = c;
        c.limit = Some("stopped".into());
        c.bound = Some(r"bound = (\S+)".into());
        let (s, p, b) = parse_output(&c, "stopped\nobjective = 10\nbound = 8").unwrap();
        assert_eq!((s, p, b), (SolveStatus::LimitReached, 10.0, 8.0));
    }

    #[test]
    fn missing_executable_is_an_error() {
        let mut c = cfg();
        c.executable = "/nonexistent/solver".into();
        if std::env::var(SOLVER_ENV).is_err() {
            assert!(external_solve("x.mps", &c).is_err());
        }
    }

    #[test]
    fn nonzero_exit_is_an_error() {
        let mut c = cfg();
        c.args = vec!["-c".into(), "echo 'objective = 1'; exit 3".into()];
        if std::env::var(SOLVER_ENV).is_err() {
            assert!(external_solve("x.mps", &c).is_err());
        }
    }
}
