//! The `steering` command-line tool.
//!
//! Every subcommand prints one JSON report
//! `{schema, command, inputs, results, residuals, runtime_ms}` on standard
//! output. Exit status is 0 on success, 1 when the input fails a validation
//! or feasibility check, and 2 for usage, I/O and parse errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::assemblage::{behaviour_from, random_ns, random_ns_with_rank, random_povm, reduced_state, validate, Assemblage, Behaviour, Povm, Scenario, Tolerances};
use crate::error::Error;
use crate::freeprob::{contradiction_report, kesten_estimate};
use crate::freeword::{count, enumerate};
use crate::functionals::{bell_i, seesaw_runs, tensor_bound};
use crate::gns::{behaviour_via_gns, check_assemblage};
use crate::hierarchy::{build_moment_problem, dykstra_feasibility, export_sdpa, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::io::{read_assemblage, realization_to_string, write_assemblage};
use crate::numkernel::random::stream;
use crate::numkernel::{hermitian_eig, DEFAULT_RANK_TOL};
use crate::realization::{gisin_realize, verify_realization};

pub const REPORT_SCHEMA: &str = "steering.report.v1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "steering", version, about = "Quantum steering assemblages: validation, realizations, GNS, moment hierarchy, functionals")]
pub struct Cli {
    /// Worker threads for parallel restarts and trials (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a random no-signaling assemblage.
    Gen(GenArgs),
    /// Check positivity, no-signaling and normalization.
    Validate(ValidateArgs),
    /// Build the purification-based quantum realization.
    Realize(RealizeArgs),
    /// GNS representation and commutant steering operators.
    Gns(GnsArgs),
    /// Moment-hierarchy feasibility and SDPA export.
    Hierarchy(HierarchyArgs),
    /// See-saw maximization of the correlation functional over tensor models.
    Seesaw(SeesawArgs),
    /// Norms of sums of random reflections.
    Freeprob(FreeprobArgs),
    /// Count reduced words in the free product of cyclic groups.
    Words(WordsArgs),
}

/// An input file given positionally or with `--in`.
#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(value_name = "INPUT", required_unless_present = "input_flag")]
    pub input: Option<PathBuf>,
    #[arg(long = "in", value_name = "INPUT", conflicts_with = "input")]
    pub input_flag: Option<PathBuf>,
}

impl InputArgs {
    fn path(&self) -> &Path {
        self.input.as_deref().or(self.input_flag.as_deref()).expect("clap enforces an input")
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub m: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub k: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub n: u64,
    /// Rank of the reduced state (default: random).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub rank: Option<u64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1e-9, value_parser = positive_f64)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct RealizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GnsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Write the behaviour table for random trusted POVMs as CSV.
    #[arg(long, requires = "seed")]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=16))]
    pub trusted_settings: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=16))]
    pub trusted_outcomes: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=8))]
    pub level: u64,
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_TOL, value_parser = positive_f64)]
    pub tol: f64,
    /// Only build (and export) the problem.
    #[arg(long)]
    pub no_solve: bool,
}

#[derive(Debug, Args)]
pub struct SeesawArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub m: u64,
    #[arg(long = "dA", value_parser = clap::value_parser!(u64).range(2..=64))]
    pub d_a: u64,
    #[arg(long = "dB", value_parser = clap::value_parser!(u64).range(2..=64))]
    pub d_b: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..=100_000))]
    pub restarts: u64,
    #[arg(long)]
    pub seed: u64,
    /// Per-sweep values of every restart.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FreeprobArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=1000))]
    pub m: u64,
    /// One or more even dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = even_dimension)]
    pub d: Vec<usize>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..=10_000))]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// `(d, trial, norm)` rows.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WordsArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub m: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub k: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=64))]
    pub level: u64,
    /// Also list the words (refused above 100000 words).
    #[arg(long)]
    pub list: bool,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

fn even_dimension(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d) if d >= 2 && d % 2 == 0 => Ok(d),
        _ => Err(format!("{s:?} is not an even dimension ≥ 2")),
    }
}

/// Outcome of a subcommand: a report plus whether its check passed.
struct Outcome {
    inputs: Value,
    results: Value,
    residuals: Value,
    passed: bool,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) | Error::Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

type Run = std::result::Result<Outcome, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    run(&cli, out, err)
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let name = command_name(&cli.command);
    let result = match cli.jobs {
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs as usize).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(Failure::Usage(format!("--jobs: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(o) => {
            let report = json!({
                "schema": REPORT_SCHEMA,
                "command": name,
                "inputs": o.inputs,
                "results": o.results,
                "residuals": o.residuals,
                "runtime_ms": start.elapsed().as_secs_f64() * 1e3,
            });
            if writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap_or_default()).is_err() {
                return EXIT_USAGE;
            }
            if o.passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILED
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Gen(_) => "gen",
        Command::Validate(_) => "validate",
        Command::Realize(_) => "realize",
        Command::Gns(_) => "gns",
        Command::Hierarchy(_) => "hierarchy",
        Command::Seesaw(_) => "seesaw",
        Command::Freeprob(_) => "freeprob",
        Command::Words(_) => "words",
    }
}

fn dispatch(c: &Command) -> Run {
    match c {
        Command::Gen(a) => gen(a),
        Command::Validate(a) => validate_cmd(a),
        Command::Realize(a) => realize(a),
        Command::Gns(a) => gns(a),
        Command::Hierarchy(a) => hierarchy(a),
        Command::Seesaw(a) => seesaw_cmd(a),
        Command::Freeprob(a) => freeprob(a),
        Command::Words(a) => words(a),
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn validation_json(a: &Assemblage, tol: f64) -> std::result::Result<(Value, bool), Failure> {
    let r = validate(a, &Tolerances::uniform(tol))?;
    Ok((
        json!({
            "psd_violation": r.psd_violation,
            "ns_violation": r.ns_violation,
            "trace_defect": r.trace_defect,
            "worst_violation": r.worst(),
        }),
        r.passes(),
    ))
}

/// Prefixes file-level errors with the offending path.
fn at<T>(path: &Path, r: crate::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match Failure::from(e) {
        Failure::Usage(msg) => Failure::Usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn load(path: &Path) -> std::result::Result<Assemblage, Failure> {
    at(path, read_assemblage(path))
}

/// Loads an assemblage and, if it fails validation, the report to return instead.
fn load_valid(input: &InputArgs, inputs: &Value) -> std::result::Result<(Assemblage, Option<Outcome>), Failure> {
    let a = load(input.path())?;
    let (residuals, passed) = validation_json(&a, 1e-9)?;
    let rejected = (!passed).then(|| Outcome {
        inputs: inputs.clone(),
        results: json!({ "valid": false }),
        residuals,
        passed: false,
    });
    Ok((a, rejected))
}

fn gen(args: &GenArgs) -> Run {
    let scenario = Scenario::new(args.m as usize, args.k as usize, args.n as usize)?;
    let a = match args.rank {
        Some(r) if r > args.n => return Err(Failure::Usage(format!("--rank {r} exceeds --n {}", args.n))),
        Some(r) => random_ns_with_rank(scenario, r as usize, args.seed)?,
        None => random_ns(scenario, args.seed),
    };
    at(&args.output, write_assemblage(&a, &args.output))?;
    let (residuals, passed) = validation_json(&a, 1e-9)?;
    Ok(Outcome {
        inputs: json!({ "m": args.m, "k": args.k, "n": args.n, "rank": args.rank, "seed": args.seed }),
        results: json!({ "output": path_str(&args.output), "rank": hermitian_eig(&reduced_state(&a)?)?.support(DEFAULT_RANK_TOL).len() }),
        residuals,
        passed,
    })
}

fn validate_cmd(args: &ValidateArgs) -> Run {
    let a = load(args.input.path())?;
    let s = a.scenario();
    let (residuals, passed) = validation_json(&a, args.tol)?;
    Ok(Outcome {
        inputs: json!({ "input": path_str(args.input.path()), "tol": args.tol }),
        results: json!({ "valid": passed, "m": s.settings, "k": s.outcomes, "n": s.dim }),
        residuals,
        passed,
    })
}

fn realize(args: &RealizeArgs) -> Run {
    let inputs = json!({ "input": path_str(args.input.path()), "output": args.output.as_deref().map(path_str) });
    let (a, rejected) = load_valid(&args.input, &inputs)?;
    if let Some(r) = rejected {
        return Ok(r);
    }
    let r = gisin_realize(&a)?;
    let error = verify_realization(&r, &a)?;
    if let Some(path) = &args.output {
        at(path, std::fs::write(path, realization_to_string(&r, Some(error))?).map_err(Error::from))?;
    }
    Ok(Outcome {
        inputs,
        results: json!({ "dA": r.dim_a, "n": r.trusted_dim() }),
        residuals: json!({ "reconstruction_error": error }),
        passed: error <= 1e-8,
    })
}

fn gns(args: &GnsArgs) -> Run {
    let inputs = json!({
        "input": path_str(args.input.path()),
        "csv": args.csv.as_deref().map(path_str),
        "trusted_settings": args.trusted_settings,
        "trusted_outcomes": args.trusted_outcomes,
        "seed": args.seed,
    });
    let (a, rejected) = load_valid(&args.input, &inputs)?;
    if let Some(r) = rejected {
        return Ok(r);
    }
    let (rep, ops, res) = check_assemblage(&a)?;
    let mut residuals = json!({
        "homomorphism": res.homomorphism,
        "state": res.state,
        "omega_norm": res.omega_norm,
        "positivity": res.positivity,
        "completeness": res.completeness,
        "commutant": res.commutant,
        "reproduction": res.reproduction,
        "worst": res.worst(),
    });
    let mut worst = res.worst();
    if let (Some(path), Some(seed)) = (&args.csv, args.seed) {
        let n = a.scenario().dim;
        let trusted: Vec<Povm> = (0..args.trusted_settings)
            .map(|y| random_povm(n, args.trusted_outcomes as usize, &mut stream(seed, y)))
            .collect();
        let via_gns = behaviour_via_gns(&rep, &ops, &trusted)?;
        let direct = behaviour_from(&a, &trusted)?;
        let gap = via_gns.max_difference(&direct);
        residuals["behaviour"] = json!(gap);
        worst = worst.max(gap);
        write_behaviour_csv(&via_gns, path)?;
    }
    Ok(Outcome { inputs, results: json!({ "gns_dim": res.gns_dim, "n": a.scenario().dim }), residuals, passed: worst <= 1e-9 })
}

fn csv_writer(path: &Path) -> std::result::Result<csv::Writer<std::fs::File>, Failure> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn csv_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("writing CSV: {e}"))
}

/// Rows `x, y, a, b, p` with 1-based indices.
fn write_behaviour_csv(p: &Behaviour, path: &Path) -> std::result::Result<(), Failure> {
    let mut w = csv_writer(path)?;
    w.write_record(["x", "y", "a", "b", "p"]).map_err(csv_failure)?;
    for x in 0..p.settings_a() {
        for y in 0..p.settings_b() {
            for a in 0..p.outcomes_a() {
                for b in 0..p.outcomes_b() {
                    let row = [(x + 1).to_string(), (y + 1).to_string(), (a + 1).to_string(), (b + 1).to_string(), p.get(a, b, x, y).to_string()];
                    w.write_record(&row).map_err(csv_failure)?;
                }
            }
        }
    }
    w.flush().map_err(csv_failure)
}

fn hierarchy(args: &HierarchyArgs) -> Run {
    let inputs = json!({
        "input": path_str(args.input.path()),
        "level": args.level,
        "export": args.export.as_deref().map(path_str),
        "max_iters": args.max_iters,
        "tol": args.tol,
    });
    let (a, rejected) = load_valid(&args.input, &inputs)?;
    if let Some(r) = rejected {
        return Ok(r);
    }
    let problem = build_moment_problem(&a, args.level as usize)?;
    if let Some(path) = &args.export {
        at(path, export_sdpa(&problem, path))?;
    }
    let mut results = json!({
        "words": problem.words().len(),
        "matrix_dim": problem.matrix_dim(),
        "classes": problem.classes().len(),
        "free_classes": problem.free_class_count(),
    });
    if args.no_solve {
        return Ok(Outcome { inputs, results, residuals: json!({}), passed: true });
    }
    let r = dykstra_feasibility(&problem, args.max_iters, args.tol);
    let constraint = problem.constraint_violation(&r.witness)?;
    results["status"] = json!(if r.is_feasible() { "feasible" } else { "undetermined" });
    results["iterations"] = json!(r.iterations);
    Ok(Outcome {
        inputs,
        results,
        residuals: json!({ "residual": r.residual, "witness_constraint_violation": constraint }),
        passed: r.is_feasible(),
    })
}

fn seesaw_cmd(args: &SeesawArgs) -> Run {
    let (m, d_a, d_b) = (args.m as usize, args.d_a as usize, args.d_b as usize);
    let runs = seesaw_runs(m, d_a, d_b, args.restarts as usize, args.seed)?;
    let best = runs
        .iter()
        .max_by(|p, q| p.value.total_cmp(&q.value).then(q.restart.cmp(&p.restart)))
        .expect("at least one restart");
    let bound = tensor_bound(m);
    let descent = runs
        .iter()
        .flat_map(|r| r.sweeps.windows(2).map(|w| (w[0] - w[1]).max(0.0)))
        .fold(0.0, f64::max);
    let invariant = runs.iter().map(|r| r.invariant_defect()).fold(0.0, f64::max);
    let check = bell_i(&best.behaviour()?)?;
    if let Some(path) = &args.csv {
        let mut w = csv_writer(path)?;
        w.write_record(["restart", "sweep", "value"]).map_err(csv_failure)?;
        for r in &runs {
            for (i, v) in r.sweeps.iter().enumerate() {
                w.write_record([(r.restart + 1).to_string(), (i + 1).to_string(), v.to_string()]).map_err(csv_failure)?;
            }
        }
        w.flush().map_err(csv_failure)?;
    }
    Ok(Outcome {
        inputs: json!({ "m": m, "dA": d_a, "dB": d_b, "restarts": args.restarts, "seed": args.seed, "csv": args.csv.as_deref().map(path_str) }),
        results: json!({
            "value": best.value,
            "bound": bound,
            "gap": bound - best.value,
            "exceeds_bound": best.value > bound + 1e-9,
            "best_restart": best.restart + 1,
            "sweeps": best.sweeps.len(),
        }),
        residuals: json!({
            "max_sweep_decrease": descent,
            "observable_defect": invariant,
            "value_vs_behaviour": (check - best.value).abs(),
        }),
        passed: true,
    })
}

fn freeprob(args: &FreeprobArgs) -> Run {
    let m = args.m as usize;
    let mut per_dim = Vec::with_capacity(args.d.len());
    let mut rows = Vec::new();
    for &d in &args.d {
        let s = kesten_estimate(m, d, args.trials as usize, args.seed)?;
        for (t, v) in s.norms.iter().enumerate() {
            rows.push((d, t + 1, *v));
        }
        per_dim.push(json!({
            "d": d,
            "mean": s.mean,
            "max": s.max,
            "min": s.min,
            "std": s.std,
            "below_paper_cap": s.max <= s.paper_cap,
        }));
    }
    let report = contradiction_report(m, args.d[0], args.seed)?;
    if let Some(path) = &args.csv {
        let mut w = csv_writer(path)?;
        w.write_record(["d", "trial", "norm"]).map_err(csv_failure)?;
        for (d, t, v) in rows {
            w.write_record([d.to_string(), t.to_string(), v.to_string()]).map_err(csv_failure)?;
        }
        w.flush().map_err(csv_failure)?;
    }
    Ok(Outcome {
        inputs: json!({ "m": m, "d": args.d, "trials": args.trials, "seed": args.seed, "csv": args.csv.as_deref().map(path_str) }),
        results: json!({
            "yanyin_value": report.yanyin_value,
            "norm_estimate": report.norm_estimate,
            "free_value": report.free_value,
            "paper_cap": report.paper_cap,
            "gap": report.gap,
            "norms": per_dim,
        }),
        residuals: json!({ "yanyin_defect": (report.yanyin_value - m as f64).abs() }),
        passed: true,
    })
}

fn words(args: &WordsArgs) -> Run {
    let (m, k, level) = (args.m as usize, args.k as usize, args.level as usize);
    let by_length: Vec<String> = (0..=level)
        .map(|l| {
            let total = count(m, k, l);
            let shorter = if l == 0 { 0 } else { count(m, k, l - 1) };
            total.saturating_sub(shorter).to_string()
        })
        .collect();
    let total = count(m, k, level);
    let mut results = json!({ "total": total.to_string(), "by_length": by_length });
    if args.list {
        if total > 100_000 {
            return Err(Failure::Usage(format!("--list refused: {total} words")));
        }
        results["words"] = json!(enumerate(m, k, level).iter().map(|w| w.to_string()).collect::<Vec<_>>());
    }
    Ok(Outcome { inputs: json!({ "m": m, "k": k, "level": level }), results, residuals: json!({}), passed: true })
}
