//! The `evlcp` command-line front end.
//!
//! Exit codes: 0 success or positive verdict, 1 negative verdict or failed
//! check, 2 undecided or unmet precondition, 3 input error.

pub mod instance_file;
pub mod report;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bounds::{compute, verify_bound, BoundOptions, BoundReport, Certificate, Method, VerifyOptions};
use crate::builtin;
use crate::error::{Error, Result};
use crate::matrix::Norm;
use crate::maximize::MaxOptions;
use crate::model::EvlcpInstance;
use crate::solver::{self, SolveOptions, SolveOutcome};
use crate::wcheck::{self, has_row_w_property, WOptions, Witness};

use report::{InstanceInfo, Report};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NEGATIVE: u8 = 1;
pub const EXIT_UNDECIDED: u8 = 2;
pub const EXIT_INPUT: u8 = 3;

/// Solutions from the two solvers agreeing within this distance are the same.
const AGREEMENT_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "evlcp", version, about = "Error bounds, W-property checks and solvers for min_j (A_j x + q_j) = 0")]
pub struct Cli {
    /// Print the JSON report instead of the text summary
    #[arg(long, global = true)]
    pub json: bool,

    /// Record wall-clock time in the report (output then varies between runs)
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Instance file (evlcp-v1 JSON) or the name of a built-in example
    pub instance: Option<String>,

    /// Built-in example: example-2.1, example-4.1, example-4.2 or example-4.3
    #[arg(long, conflicts_with = "instance")]
    pub builtin: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct MaxArgs {
    /// Grid step for the weight grid (default depends on the size)
    #[arg(long)]
    pub grid: Option<f64>,

    /// Cap on exhaustive enumerations (vertices, block pairs)
    #[arg(long)]
    pub budget: Option<u64>,
}

impl MaxArgs {
    fn options(&self) -> MaxOptions {
        let mut opts = MaxOptions { grid_step: self.grid, ..MaxOptions::default() };
        if let Some(b) = self.budget {
            opts.vertex_budget = b;
        }
        opts
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide the row W-property and evaluate both sufficient conditions
    CheckW {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Cap on the number of representative matrices
        #[arg(long, default_value_t = wcheck::DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
    },
    /// Compute an error bound constant
    Bound {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value = "convex")]
        method: Method,
        #[arg(long, default_value = "inf")]
        norm: Norm,
        #[command(flatten)]
        max: MaxArgs,
    },
    /// Solve the instance
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value_t = SolveChoice::Auto)]
        method: SolveChoice,
        #[arg(long, default_value_t = solver::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = solver::DEFAULT_MAXIT)]
        maxit: usize,
        /// Cap on the number of selections tried by enumeration
        #[arg(long, default_value_t = solver::DEFAULT_SOLVE_BUDGET)]
        budget: u64,
    },
    /// Check a bound against random points around the solution
    Verify {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value = "convex")]
        method: Method,
        #[arg(long, default_value = "inf")]
        norm: Norm,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        max: MaxArgs,
    },
    /// Recompute the reference quantities of a built-in example
    Report {
        #[command(flatten)]
        instance: InstanceArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolveChoice {
    /// Enumeration when within budget, Newton otherwise
    Auto,
    Enumerate,
    Newton,
    /// Run both and compare
    Both,
}

/// A finished command: the report, its text rendering and the exit code.
#[derive(Debug)]
pub struct Output {
    pub report: Report,
    pub text: String,
    pub code: u8,
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) => EXIT_INPUT,
        Error::Precondition(_) | Error::Budget { .. } | Error::Overflow(_) => EXIT_UNDECIDED,
        _ => EXIT_NEGATIVE,
    }
}

struct Loaded {
    inst: EvlcpInstance,
    info: InstanceInfo,
    builtin: Option<String>,
}

fn load(args: &InstanceArgs) -> Result<Loaded> {
    let (inst, source, name) = match (&args.builtin, &args.instance) {
        (Some(name), _) => (builtin::instance(name)?, format!("builtin:{name}"), Some(name.clone())),
        (None, Some(arg)) if !Path::new(arg).exists() && builtin::NAMES.contains(&arg.as_str()) => {
            (builtin::instance(arg)?, format!("builtin:{arg}"), Some(arg.clone()))
        }
        (None, Some(path)) => (instance_file::read(Path::new(path))?, path.clone(), None),
        (None, None) => return Err(Error::Input("no instance given (pass a file or --builtin <name>)".into())),
    };
    let info = InstanceInfo { source, sha256: instance_file::digest(&inst), n: inst.n(), k: inst.k() };
    Ok(Loaded { inst, info, builtin: name })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(", "))
}

fn header(info: &InstanceInfo) -> String {
    format!("instance     {} (n = {}, k = {}, sha256 {})\n", info.source, info.n, info.k, &info.sha256[..16])
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result serializes")
}

pub fn run(cli: &Cli) -> Result<Output> {
    let start = Instant::now();
    let mut out = match &cli.command {
        Command::CheckW { instance, budget } => check_w(instance, *budget)?,
        Command::Bound { instance, method, norm, max } => bound(instance, *method, *norm, max)?,
        Command::Solve { instance, method, tol, maxit, budget } => {
            solve(instance, *method, SolveOptions { tol: *tol, maxit: *maxit, budget: *budget })?
        }
        Command::Verify { instance, method, norm, samples, seed, max } => {
            verify(instance, *method, *norm, VerifyOptions { samples: *samples, seed: *seed, radius: None }, max)?
        }
        Command::Report { instance } => reproduce(instance)?,
    };
    if cli.timing {
        let secs = start.elapsed().as_secs_f64();
        out.report.wall_time_s = Some(secs);
        let _ = writeln!(out.text, "wall time    {secs:.3}s");
    }
    Ok(out)
}

fn check_w(args: &InstanceArgs, budget: u64) -> Result<Output> {
    let l = load(args)?;
    let a = l.inst.matrix();
    let cert = has_row_w_property(a, &WOptions { budget, ..WOptions::default() })?;
    let spectral = wcheck::spectral_sufficient(a);
    let sdd = wcheck::sdd_violation(a);

    let mut text = header(&l.info);
    let _ = writeln!(text, "row W-property {}", cert.verdict);
    match &cert.witness {
        Witness::CommonSign { sign, min_abs_det } => {
            let _ = writeln!(
                text,
                "  all {} representative determinants have sign {sign:+} (smallest |det| {min_abs_det:e})",
                cert.vertices_checked
            );
        }
        Witness::Failing { selection, determinant, reason } => {
            let _ = writeln!(
                text,
                "  witness: selection {:?} has determinant {determinant:e} ({})",
                selection.choice,
                serde_json::to_value(reason).expect("serializes").as_str().unwrap_or_default()
            );
        }
    }
    let spectral_json = match &spectral {
        Ok(s) => {
            let verdict = if s.holds { "sufficient" } else { "not applicable" };
            let _ = writeln!(text, "spectral     rho = {:.6}, holds = {} ({verdict})", s.rho, s.holds);
            json!({"applicable": true, "rho": s.rho, "holds": s.holds})
        }
        Err(e) => {
            let _ = writeln!(text, "spectral     not applicable: {e}");
            json!({"applicable": false, "reason": e.to_string()})
        }
    };
    match &sdd {
        None => {
            let _ = writeln!(text, "dominance    holds");
        }
        Some(v) => {
            let _ = writeln!(text, "dominance    fails: {v}");
        }
    }
    let results = json!({
        "certificate": to_value(&cert),
        "spectral": spectral_json,
        "dominance": {"holds": sdd.is_none(), "violation": to_value(&sdd)},
    });
    let report = Report {
        tool: "evlcp",
        version: env!("CARGO_PKG_VERSION"),
        command: "check-w",
        options: json!({"budget": budget}),
        instance: l.info,
        seed: None,
        results,
        evaluations: Some(cert.vertices_checked),
        wall_time_s: None,
    };
    let code = if cert.verdict { EXIT_OK } else { EXIT_NEGATIVE };
    Ok(Output { report, text, code })
}

fn bound_text(text: &mut String, r: &BoundReport) {
    let _ = writeln!(text, "method       {}", r.method);
    let _ = writeln!(text, "norm         {}", r.norm);
    let _ = writeln!(text, "value        {}", r.value);
    let _ = writeln!(text, "rigor        {}", to_value(&r.rigor).as_str().unwrap_or_default());
    if let Some(s) = r.status {
        let _ = writeln!(text, "status       {}", to_value(&s).as_str().unwrap_or_default());
    }
    let _ = writeln!(text, "evaluations  {} (objective {})", r.evaluations, r.objective_evaluations);
    match &r.certificate {
        Some(Certificate::Weights { weights }) => {
            let _ = writeln!(text, "weights      {}", serde_json::to_string(weights).expect("serializes"));
        }
        Some(Certificate::Selection { selection }) => {
            let _ = writeln!(text, "selection    {:?}", selection.choice);
        }
        Some(Certificate::Pair { pair, weights }) => {
            let _ = writeln!(text, "pair         {:?}", pair.pairs);
            let _ = writeln!(text, "weights      {}", serde_json::to_string(weights).expect("serializes"));
        }
        None => {}
    }
    for note in &r.notes {
        let _ = writeln!(text, "note         {note}");
    }
}

fn bound(args: &InstanceArgs, method: Method, norm: Norm, max: &MaxArgs) -> Result<Output> {
    let l = load(args)?;
    let opts = BoundOptions { max: max.options(), ..BoundOptions::default() };
    let r = compute(method, l.inst.matrix(), norm, &opts)?;
    let mut text = header(&l.info);
    bound_text(&mut text, &r);
    let code = if r.value.is_finite() { EXIT_OK } else { EXIT_NEGATIVE };
    let report = Report {
        tool: "evlcp",
        version: env!("CARGO_PKG_VERSION"),
        command: "bound",
        options: json!({"method": method, "norm": norm, "grid": max.grid, "budget": max.budget}),
        instance: l.info,
        seed: None,
        evaluations: Some(r.evaluations),
        results: to_value(&r),
        wall_time_s: None,
    };
    Ok(Output { report, text, code })
}

fn solve_text(text: &mut String, s: &SolveOutcome) {
    let _ = writeln!(text, "method       {}", to_value(&s.method).as_str().unwrap_or_default());
    let _ = writeln!(text, "x            {}", fmt_vec(&s.x));
    let _ = writeln!(text, "residual     {:e}", s.residual_norm);
    let _ = writeln!(text, "selection    {:?}", s.selection.choice);
    let _ = writeln!(text, "iterations   {}", s.iterations);
}

fn solve(args: &InstanceArgs, method: SolveChoice, opts: SolveOptions) -> Result<Output> {
    let l = load(args)?;
    let inst = &l.inst;
    let zero = vec![0.0; inst.n()];
    let mut text = header(&l.info);
    let (results, evaluations, code) = match method {
        SolveChoice::Both => {
            let e = solver::solve_enumerate(inst, &opts)?;
            let nw = solver::solve_newton(inst, &zero, &opts);
            solve_text(&mut text, &e);
            let (newton_json, distance) = match &nw {
                Ok(nw) => {
                    solve_text(&mut text, nw);
                    let d = e.x.iter().zip(&nw.x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    (to_value(nw), Some(d))
                }
                Err(err) => {
                    let _ = writeln!(text, "newton       failed: {err}");
                    (json!({"error": err.to_string()}), None)
                }
            };
            let agree = distance.is_some_and(|d| d <= AGREEMENT_TOL);
            let _ = writeln!(
                text,
                "agreement    {agree} (max distance {})",
                distance.map_or("n/a".to_string(), |d| format!("{d:e}"))
            );
            let results = json!({
                "enumerate": to_value(&e),
                "newton": newton_json,
                "max_distance": distance,
                "agree": agree,
            });
            let iterations = nw.as_ref().map_or(0, |s| s.iterations as u64);
            (results, iterations, if agree { EXIT_OK } else { EXIT_NEGATIVE })
        }
        _ => {
            let s = match method {
                SolveChoice::Enumerate => solver::solve_enumerate(inst, &opts)?,
                SolveChoice::Newton => solver::solve_newton(inst, &zero, &opts)?,
                _ => solver::solve(inst, &opts)?,
            };
            solve_text(&mut text, &s);
            (to_value(&s), s.iterations as u64, EXIT_OK)
        }
    };
    let report = Report {
        tool: "evlcp",
        version: env!("CARGO_PKG_VERSION"),
        command: "solve",
        options: json!({
            "method": format!("{method:?}").to_lowercase(),
            "tol": opts.tol,
            "maxit": opts.maxit,
            "budget": opts.budget,
        }),
        instance: l.info,
        seed: None,
        results,
        evaluations: Some(evaluations),
        wall_time_s: None,
    };
    Ok(Output { report, text, code })
}

fn verify(args: &InstanceArgs, method: Method, norm: Norm, vopts: VerifyOptions, max: &MaxArgs) -> Result<Output> {
    let l = load(args)?;
    let opts = BoundOptions { max: max.options(), ..BoundOptions::default() };
    let r = compute(method, l.inst.matrix(), norm, &opts)?;
    let v = verify_bound(&l.inst, &r, &vopts)?;
    let mut text = header(&l.info);
    let kind = if method.is_lower() { "lower multiplier" } else { "bound" };
    let _ = writeln!(
        text,
        "method       {method} ({kind} {}, {})",
        r.value,
        to_value(&r.rigor).as_str().unwrap_or_default()
    );
    let _ = writeln!(text, "samples      {} (seed {}, radius {})", v.samples, v.seed, v.radius);
    let _ = writeln!(text, "max ratio    {}", v.max_ratio);
    let _ = writeln!(text, "min ratio    {}", v.min_ratio);
    let _ = writeln!(text, "lower        {}", v.lower_multiplier);
    let _ = writeln!(text, "violations   {} upper, {} lower", v.upper_violations, v.lower_violations);
    let _ = writeln!(text, "result       {}", if v.passed { "pass" } else { "fail" });
    if let Some(m) = &v.message {
        let _ = writeln!(text, "message      {m}");
    }
    let code = if v.passed { EXIT_OK } else { EXIT_NEGATIVE };
    let report = Report {
        tool: "evlcp",
        version: env!("CARGO_PKG_VERSION"),
        command: "verify",
        options: json!({
            "method": method,
            "norm": norm,
            "samples": vopts.samples,
            "grid": max.grid,
            "budget": max.budget,
        }),
        instance: l.info,
        seed: Some(vopts.seed),
        evaluations: Some(v.samples as u64),
        results: json!({"bound": to_value(&r), "verification": to_value(&v)}),
        wall_time_s: None,
    };
    Ok(Output { report, text, code })
}

fn reproduce(args: &InstanceArgs) -> Result<Output> {
    let l = load(args)?;
    let name = l
        .builtin
        .clone()
        .ok_or_else(|| Error::Input("report needs a built-in example, not an instance file".into()))?;
    let rows = report::reproduce(&name)?;
    let mut text = header(&l.info);
    text.push_str(&report::render_table(&name, &rows));
    let matched = rows.iter().filter(|r| r.matches).count();
    let report = Report {
        tool: "evlcp",
        version: env!("CARGO_PKG_VERSION"),
        command: "report",
        options: json!({"builtin": name}),
        instance: l.info,
        seed: None,
        evaluations: None,
        results: json!({"rows": to_value(&rows), "matched": matched, "total": rows.len()}),
        wall_time_s: None,
    };
    Ok(Output { report, text, code: EXIT_OK })
}

/// Parses `args`, runs the command and prints the result.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                print!("{}", out.report.to_json());
            } else {
                print!("{}", out.text);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
