use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fbound(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbound")).args(args).current_dir(dir).output().unwrap()
}

fn micro_text() -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/micro.fbinst");
    std::fs::read_to_string(p).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gen(dir: &Path, seed: &str, dims: &str, name: &str) {
    let o = fbound(&["gen", "--seed", seed, "--dims", dims, "--out", name], dir);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn singleton_bound_combines_sub_bounds() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "1", "2,2,2,2,16,4", "g.fbinst");
    let o = fbound(
        &["bound", "g.fbinst", "--formulation", "v3k", "--k0", "1", "--partition", "singletons", "--primal", "50000"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "g");
    assert_eq!(&rows[0][4..], &["v3k", "1", "2"]);
    let dual: f64 = rows[0][2].parse().unwrap();
    let parts: f64 = rows[1..].iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((dual - parts).abs() < 1e-5);
    let gap: f64 = rows[0][3].parse().unwrap();
    assert!((gap - 100.0 * (50000.0 - dual) / 50000.0).abs() < 1e-3);
}

fn strip_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.remove("elapsed_s");
            m.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn repeated_bound_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "5", "2,2,2,2,16,4", "g.fbinst");
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let o = fbound(&["bound", "g.fbinst", "--partition", "1|2", "--jobs", "2", "--out", run], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let tsv = std::fs::read_to_string(dir.path().join(format!("{run}.tsv"))).unwrap();
        let mut json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{run}.json"))).unwrap()).unwrap();
        strip_timing(&mut json);
        reports.push((tsv, json));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn report_merges_json_files() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "2", "1,1,1,2,8,4", "g.fbinst");
    for (stem, f) in [("v0", "v0"), ("v3", "v3")] {
        let o = fbound(&["bound", "g.fbinst", "--formulation", f, "--out", stem], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = fbound(&["report", "v0.json", "v3.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().contains("\tv3\t"));
}

#[test]
fn unknown_flag_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = fbound(&["bound", "x.fbinst", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = fbound(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn aggregation_refused_with_varying_step_durations() {
    let dir = tempfile::tempdir().unwrap();
    let text = micro_text().replacen("step_duration = [1.0, 1.0, 1.0, 1.0]", "step_duration = [1.0, 2.0, 1.0, 1.0]", 1);
    write(dir.path(), "m.fbinst", &text);
    let o = fbound(&["bound", "m.fbinst", "--aggregate-weeks"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("aggregation refused"), "{}", stderr(&o));
    assert!(fbound(&["bound", "m.fbinst"], dir.path()).status.success());
}

#[test]
fn infeasibility_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // The initial stock needs three weeks to burn down, but the outage is due by week 3.
    let text = micro_text().replacen("initial_stock = 30.0", "initial_stock = 70.0", 1);
    write(dir.path(), "m.fbinst", &text);
    for args in [&["bound", "m.fbinst"][..], &["preprocess", "m.fbinst"], &["oracle", "m.fbinst"]] {
        let o = fbound(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn invalid_instance_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let text = micro_text().replacen("retention = 0.9", "retention = 1.5", 1).replacen("max_stock = 60.0", "max_stock = 5.0", 1);
    write(dir.path(), "m.fbinst", &text);
    let o = fbound(&["validate", "m.fbinst"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("retention") && err.contains("threshold"), "{err}");
    assert!(fbound(&["validate", "missing.fbinst"], dir.path()).status.code() == Some(1));
}

#[test]
fn build_writes_mps_and_counts_rows() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.fbinst", &micro_text());
    let o = fbound(&["build", "m.fbinst", "--ct6", "per-cycle", "--mps", "m.mps"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("ct6\tper-cycle"));
    assert!(report.contains("rows:defVarStretch\t"));
    let mps = std::fs::read_to_string(dir.path().join("m.mps")).unwrap();
    assert!(mps.starts_with("NAME") && mps.trim_end().ends_with("ENDATA"));
    let o = fbound(&["build", "m.fbinst", "--formulation", "v3", "--ct6", "shared"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn external_stub_solver_is_used() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.fbinst", &micro_text());
    let cfg = r#"
executable = "sh"
args = ["-c", "test -s \"$0\" && echo 'Objective value: 1234.5'", "{mps}"]
objective = 'Objective value:\s+(\S+)'
"#;
    write(dir.path(), "stub.toml", cfg);
    let o = fbound(&["bound", "m.fbinst", "--solver-config", "stub.toml", "--json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dual_bound"], 1234.5);
    assert_eq!(v["subproblems"][0]["provenance"], "external:sh");
}

#[test]
fn oracle_and_bound_agree_on_the_micro_instance() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.fbinst", &micro_text());
    let o = fbound(&["oracle", "m.fbinst"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let oracle: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let o = fbound(&["bound", "m.fbinst", "--json"], dir.path());
    let bound: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (a, b) = (oracle["value"].as_f64().unwrap(), bound["dual_bound"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-7 * a.abs());
}
