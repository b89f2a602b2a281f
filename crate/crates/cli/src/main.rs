//! `fbound`: batch front-end computing dual bounds for nuclear outage
//! scheduling instances.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use fbound::formulations::{build_model, Ct6Mode, Formulation, RelaxationConfig};
use fbound::instance::{generate_synthetic, parse_instance, validate_instance, write_instance_string, Dims};
use fbound::mps::write_mps;
use fbound::oracle::{oracle_optimum, Ct6Oracle, OracleConfig, DEFAULT_CAP};
use fbound::pipeline::{instance_name, run_bound, BoundOptions, SolverChoice};
use fbound::preprocess::{preprocess_report, tighten_time_windows, TightenedWindows};
use fbound::solver::{AdapterConfig, MipLimits};
use fbound::transforms::{aggregate_time_steps, PartitionSpec};
use fbound::Error;

#[derive(Parser, Debug)]
#[command(name = "fbound", version, about = "Dual bounds for nuclear outage scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate an instance file.
    Validate { instance: PathBuf },
    /// Report original and tightened outage windows.
    Preprocess {
        instance: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a relaxation, write it as MPS and report its size.
    Build {
        instance: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Where to write the MPS file.
        #[arg(long)]
        mps: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a dual bound: aggregate, partition, build, solve, combine.
    Bound(BoundArgs),
    /// Exact optimum by enumeration of outage schedules.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value = "off", value_parser = ["off", "exact"])]
        ct6: String,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge JSON bound reports into one table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic instance.
    Gen {
        #[arg(long)]
        seed: u64,
        /// `I,J,K,S,T,W`.
        #[arg(long)]
        dims: Dims,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, default_value = "v0")]
    formulation: Formulation,
    #[arg(long, default_value_t = 0)]
    k0: usize,
    #[arg(long, default_value = "off")]
    ct6: Ct6Mode,
    #[arg(long)]
    eliminate_stocks: bool,
    #[arg(long)]
    aggregate_weeks: bool,
}

impl ModelArgs {
    fn config(&self) -> RelaxationConfig {
        RelaxationConfig {
            formulation: self.formulation,
            k0: self.k0,
            ct6: self.ct6,
            eliminate_stocks: self.eliminate_stocks,
        }
    }
}

#[derive(Args, Debug)]
struct BoundArgs {
    instance: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// `all`, `singletons` or 1-based groups such as `1,2|3`.
    #[arg(long, default_value = "all")]
    partition: PartitionSpec,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 60.0)]
    time_limit_s: f64,
    /// Maximum LP relaxations per sub-solve.
    #[arg(long)]
    node_limit: Option<usize>,
    /// External solver adapter (TOML); the internal solver is used otherwise.
    #[arg(long)]
    solver_config: Option<PathBuf>,
    /// Reference primal value for the gap column.
    #[arg(long)]
    primal: Option<f64>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    json: bool,
    /// Write `<out>.tsv` and `<out>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_extension(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn load(path: &Path) -> anyhow::Result<fbound::Instance> {
    Ok(parse_instance(path)?)
}

fn fmt_week(w: Option<i64>) -> String {
    w.map_or_else(|| "-".into(), |x| x.to_string())
}

fn cmd_validate(path: &Path) -> anyhow::Result<()> {
    let inst = load(path)?;
    let v = validate_instance(&inst);
    debug_assert!(v.is_empty());
    println!(
        "{}: valid ({} T2 units, {} T1 units, {} scenarios, {} steps, {} weeks)",
        path.display(),
        inst.t2.len(),
        inst.t1.len(),
        inst.scenarios.len(),
        inst.steps(),
        inst.weeks()
    );
    Ok(())
}

fn cmd_preprocess(path: &Path, json: bool, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let inst = load(path)?;
    let rep = preprocess_report(&inst)?;
    let text = if json {
        serde_json::to_string_pretty(&rep)? + "\n"
    } else {
        let mut s = String::from("unit\tcycle\tlmin_prev\tTo\tTa\tTo_tight\tTa_tight\tremoved\n");
        for r in &rep.windows {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.unit,
                r.cycle,
                r.lmin_before,
                r.earliest,
                fmt_week(r.latest),
                r.tightened_earliest,
                fmt_week(r.tightened_latest),
                r.removed
            );
        }
        let _ = writeln!(s, "# binaries: {} before, {} after tightening", rep.binaries_before, rep.binaries_after);
        for o in &rep.conflicts {
            let _ = writeln!(s, "# empty window for outage ({}, {})", o.0, o.1);
        }
        s
    };
    emit(out, &text)?;
    if !rep.conflicts.is_empty() {
        return Err(Error::Infeasible(format!("{} outage(s) have an empty window", rep.conflicts.len())).into());
    }
    Ok(())
}

fn cmd_build(path: &Path, args: &ModelArgs, mps: &Option<PathBuf>, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let mut inst = load(path)?;
    if args.aggregate_weeks {
        inst = aggregate_time_steps(&inst)?;
    }
    let windows = tighten_time_windows(&inst)?;
    let m = build_model(&inst, &windows, &args.config())?;
    if let Some(p) = mps {
        write_mps(&m, p)?;
    }
    let mut s = String::new();
    let _ = writeln!(s, "formulation\t{}", m.meta.formulation);
    if let Some(k0) = m.meta.k0 {
        let _ = writeln!(s, "k0\t{k0}");
    }
    let _ = writeln!(s, "ct6\t{}", m.meta.ct6);
    let _ = writeln!(s, "variables\t{}", m.variables.len());
    let _ = writeln!(s, "binaries\t{}", m.num_binaries());
    let _ = writeln!(s, "constraints\t{}", m.constraints.len());
    let _ = writeln!(s, "fingerprint\t{}", m.fingerprint());
    for (tag, n) in m.tag_counts() {
        let _ = writeln!(s, "rows:{tag}\t{n}");
    }
    emit(out, &s)
}

fn cmd_bound(a: &BoundArgs) -> anyhow::Result<()> {
    if !(a.time_limit_s > 0.0) {
        bail!("--time-limit-s must be positive");
    }
    let inst = load(&a.instance)?;
    let solver = match &a.solver_config {
        Some(p) => SolverChoice::External { adapter: AdapterConfig::load(p)?, work_dir: std::env::temp_dir() },
        None => SolverChoice::Internal,
    };
    let opts = BoundOptions {
        relaxation: a.model.config(),
        aggregate_weeks: a.model.aggregate_weeks,
        partition: a.partition.clone(),
        limits: MipLimits { node_limit: a.node_limit, time_limit: Some(Duration::from_secs_f64(a.time_limit_s)) },
        jobs: a.jobs,
        solver,
        primal: a.primal,
    };
    let rep = run_bound(&instance_name(&a.instance), &inst, &opts)?;
    let json = rep.to_json() + "\n";
    let tsv = rep.to_tsv();
    match &a.out {
        Some(stem) => {
            emit(&Some(with_extension(stem, "tsv")), &tsv)?;
            emit(&Some(with_extension(stem, "json")), &json)?;
        }
        None => print!("{}", if a.json { &json } else { &tsv }),
    }
    Ok(())
}

fn cmd_oracle(path: &Path, ct6: &str, cap: u64, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let inst = load(path)?;
    let ct6 = if ct6 == "exact" { Ct6Oracle::Exact } else { Ct6Oracle::Off };
    let res = oracle_optimum(&inst, &TightenedWindows::original(&inst), &OracleConfig { ct6, cap })?;
    emit(out, &(serde_json::to_string_pretty(&res)? + "\n"))?;
    if !res.is_feasible() {
        return Err(Error::Infeasible("no schedule admits a feasible dispatch".into()).into());
    }
    Ok(())
}

fn cmd_report(paths: &[PathBuf], out: &Option<PathBuf>) -> anyhow::Result<()> {
    let mut s = String::from("instance\tprimal\tdual\tgap_pct\tformulation\tk0\tscenarios\n");
    let cell = |v: &serde_json::Value| match v {
        serde_json::Value::Null => "-".to_string(),
        serde_json::Value::String(x) => x.clone(),
        serde_json::Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), |x| format!("{x}")),
        other => other.to_string(),
    };
    for p in paths {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        let fields = ["instance", "primal_ref", "dual_bound", "gap_pct", "formulation", "k0", "scenarios"];
        let mut row = Vec::with_capacity(fields.len());
        for f in fields {
            let x = v.get(f).with_context(|| format!("{}: missing field {f}", p.display()))?;
            row.push(cell(x));
        }
        let _ = writeln!(s, "{}", row.join("\t"));
    }
    emit(out, &s)
}

fn cmd_gen(seed: u64, dims: Dims, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let inst = generate_synthetic(seed, dims)?;
    emit(out, &write_instance_string(&inst))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Validate { instance } => cmd_validate(&instance),
        Command::Preprocess { instance, json, out } => cmd_preprocess(&instance, json, &out),
        Command::Build { instance, model, mps, out } => cmd_build(&instance, &model, &mps, &out),
        Command::Bound(a) => cmd_bound(&a),
        Command::Oracle { instance, ct6, cap, out } => cmd_oracle(&instance, &ct6, cap, &out),
        Command::Report { reports, out } => cmd_report(&reports, &out),
        Command::Gen { seed, dims, out } => cmd_gen(seed, dims, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = matches!(e.downcast_ref::<Error>(), Some(Error::Infeasible(_)));
            ExitCode::from(if infeasible { 2 } else { 1 })
        }
    }
}
