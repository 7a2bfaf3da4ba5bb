//! `autoconv`: evaluate, certify, and search for bounds on the autoconvolution constant.
//!
//! Exit codes: 0 success, 2 input error, 3 state or checkpoint error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use autoconv_core::certify::{implied_sigma_upper, lattice_min_f64};
use autoconv_core::exact::fmt_floor;
use autoconv_core::objective::step_nodes;
use autoconv_core::{
    make_profile, multistart, objective, run, step_sup, Certificate, CertifyJob, CertifyOutcome, Checkpoint,
    CoefficientProfile, Error, MeshSpec, Method, RangeMode, RunOptions, ScaledConstants, SearchConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

const REPORT_SCHEMA_VERSION: u32 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_STATE: u8 = 3;

#[derive(Parser)]
#[command(name = "autoconv", version, about = "Bounds for the autoconvolution constant")]
struct Cli {
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true, env = "AUTOCONV_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the window maximum of one profile.
    Eval(EvalArgs),
    /// Certify a lower bound on a_n over a lattice mesh.
    Certify(CertifyArgs),
    /// Random-restart local search for profiles with small objective.
    Search(SearchArgs),
    /// Convert between c and sigma, or report the step function of a profile.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RangeArg {
    Proof,
    Theorem,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Proof,
    Theorem,
}

impl From<ModeArg> for RangeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Proof => RangeMode::Proof,
            ModeArg::Theorem => RangeMode::Theorem,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    GlobalLipschitz,
    CellQuadratic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::GlobalLipschitz => Method::GlobalLipschitz,
            MethodArg::CellQuadratic => Method::CellQuadratic,
        }
    }
}

#[derive(Args)]
struct ProfileInput {
    /// Comma-separated coefficients a_{-n}, ..., a_{n-1}.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "file")]
    coeffs: Option<Vec<String>>,
    /// File with one coefficient per line, or one comma-separated line.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Rescale the coefficients to sum to 4n instead of requiring it.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    profile: ProfileInput,
    #[arg(long, value_enum, default_value = "proof")]
    range: RangeArg,
    /// Write a JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    n: usize,
    /// Mesh resolution: coefficients are multiples of 4n/m.
    #[arg(long)]
    m: u64,
    #[arg(long, value_enum, default_value = "proof")]
    range: ModeArg,
    #[arg(long, value_enum, default_value = "cell-quadratic")]
    method: MethodArg,
    /// Resume from this checkpoint if it exists; keep it updated while running.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Write the certificate JSON here.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Stop after this many chunks (requires --checkpoint).
    #[arg(long, requires = "checkpoint")]
    stop_after_chunks: Option<u64>,
    /// Store the wall time in the certificate (makes the file run-dependent).
    #[arg(long)]
    record_timing: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    restarts: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Restrict to reflection-symmetric profiles.
    #[arg(long)]
    symmetric: bool,
    #[arg(long, value_enum, default_value = "proof")]
    range: ModeArg,
    /// Write the search result JSON here.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write per-restart summaries as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["sigma", "n"])]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "n")]
    sigma: Option<f64>,
    /// Profile size, for a step-function report.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    profile: ProfileInput,
    #[arg(long)]
    report: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn state(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_STATE,
            message: message.into(),
        }
    }
}

/// Core errors are input errors, except checkpoint and I/O failures while running.
fn input_err(e: Error) -> Failure {
    match e {
        Error::Checkpoint(_) => Failure::state(e.to_string()),
        other => Failure::input(other.to_string()),
    }
}

fn state_err(e: Error) -> Failure {
    match e {
        Error::Checkpoint(_) | Error::Io(_) | Error::Json(_) => Failure::state(e.to_string()),
        other => Failure::input(other.to_string()),
    }
}

type CmdResult = std::result::Result<(), Failure>;

#[derive(Serialize)]
struct Environment {
    version: &'static str,
    threads: Option<usize>,
}

#[derive(Serialize)]
struct RunReport {
    schema_version: u32,
    command: Vec<String>,
    inputs: Value,
    outputs: Value,
    derived: Value,
    environment: Environment,
    wall_time_s: f64,
}

struct Reporter {
    path: Option<PathBuf>,
    threads: Option<usize>,
    started: Instant,
}

impl Reporter {
    fn write(&self, inputs: Value, outputs: Value, derived: Value) -> CmdResult {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let report = RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            command: std::env::args().collect(),
            inputs,
            outputs,
            derived,
            environment: Environment {
                version: env!("CARGO_PKG_VERSION"),
                threads: self.threads,
            },
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::state(e.to_string()))?;
        write_file(path, &text)
    }
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Failure::state(format!("cannot write {}: {e}", path.display())))
}

fn parse_numbers(text: &str) -> std::result::Result<Vec<f64>, Failure> {
    text.split([',', '\n'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Failure::input(format!("not a number: {t:?}"))))
        .collect()
}

impl ProfileInput {
    fn is_given(&self) -> bool {
        self.coeffs.is_some() || self.file.is_some()
    }

    fn load(&self, n: usize) -> std::result::Result<CoefficientProfile, Failure> {
        let raw = match (&self.coeffs, &self.file) {
            (Some(list), None) => parse_numbers(&list.join(","))?,
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
                parse_numbers(&text)?
            }
            _ => return Err(Failure::input("give exactly one of --coeffs or --file")),
        };
        make_profile(n, raw, self.normalize).map_err(input_err)
    }
}

fn banner(mode: RangeMode) {
    if mode == RangeMode::Theorem {
        println!("note: theorem range selected (2 <= ell <= 2n, -n <= k <= n - ell); the default is the proof range");
    }
}

fn fmt_window_list(p: &[autoconv_core::WindowIndex]) -> String {
    p.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_eval(args: EvalArgs, reporter: &Reporter) -> CmdResult {
    if args.n == 0 {
        return Err(Failure::input("n must be positive"));
    }
    let p = args.profile.load(args.n)?;
    let modes: Vec<RangeMode> = match args.range {
        RangeArg::Proof => vec![RangeMode::Proof],
        RangeArg::Theorem => vec![RangeMode::Theorem],
        RangeArg::Both => vec![RangeMode::Proof, RangeMode::Theorem],
    };
    if args.range == RangeArg::Theorem {
        banner(RangeMode::Theorem);
    }
    let mut evals = Vec::new();
    for mode in modes {
        let e = objective(&p, mode);
        println!("range {mode}: value {}", e.value);
        println!("  argmax {}", fmt_window_list(&e.argmax));
        evals.push(e);
    }
    let sup = step_sup(&p).map_err(input_err)?;
    println!("step_sup {sup}");
    let sigma = ScaledConstants::from_c(sup).ok().map(|s| s.sigma_value);
    reporter.write(
        json!({ "n": args.n, "coefficients": p.coeffs() }),
        json!({ "evaluations": evals, "step_sup": sup }),
        json!({ "upper_bound_c": sup, "lower_bound_sigma": sigma }),
    )
}

fn cmd_certify(args: CertifyArgs, threads: Option<usize>, reporter: &Reporter) -> CmdResult {
    let mode: RangeMode = args.range.into();
    banner(mode);
    let mesh = MeshSpec::new(args.n, args.m).map_err(input_err)?;
    let job = CertifyJob::new(mesh, mode, args.method.into()).map_err(input_err)?;
    let start = match &args.checkpoint {
        Some(path) if path.exists() => Some(Checkpoint::load(path).map_err(state_err)?),
        _ => None,
    };
    let opts = RunOptions {
        threads,
        checkpoint_path: args.checkpoint.clone(),
        stop_after_chunks: args.stop_after_chunks,
        batch_chunks: 0,
    };
    let t0 = Instant::now();
    let mut cert = match run(job, &opts, start).map_err(state_err)? {
        CertifyOutcome::Complete(c) => c,
        CertifyOutcome::Interrupted(ck) => {
            println!(
                "interrupted after {} chunks; rerun with the same --checkpoint to continue",
                ck.chunks_done
            );
            return reporter.write(
                certify_inputs(&args),
                json!({ "checkpoint": ck }),
                json!({}),
            );
        }
    };
    if args.record_timing {
        cert.elapsed_s = Some(t0.elapsed().as_secs_f64());
    }
    print_certificate(&cert);
    if let Some(path) = &args.output {
        cert.save(path).map_err(state_err)?;
    }
    reporter.write(
        certify_inputs(&args),
        json!({ "certificate": cert }),
        json!({
            "lower_bound_c": cert.certified_bound,
            "upper_bound_sigma": implied_sigma_upper(&cert),
        }),
    )
}

fn certify_inputs(args: &CertifyArgs) -> Value {
    json!({
        "n": args.n,
        "m": args.m,
        "range_mode": RangeMode::from(args.range),
        "method": Method::from(args.method),
    })
}

fn print_certificate(cert: &Certificate) {
    println!(
        "n {} m {} range {} method {}",
        cert.n, cert.m, cert.range_mode, cert.method
    );
    println!("lattice_min {:.9}", lattice_min_f64(cert));
    println!("error_term {:.9}", cert.error_term);
    println!(
        "certified_bound {}",
        fmt_floor(&cert.certified_bound_exact.to_big(), 6)
    );
    match implied_sigma_upper(cert) {
        Some(s) => println!("implied sigma <= {s:.6}"),
        None => println!("implied sigma: none (certified bound is not positive)"),
    }
}

fn cmd_search(args: SearchArgs, threads: Option<usize>, reporter: &Reporter) -> CmdResult {
    let mode: RangeMode = args.range.into();
    banner(mode);
    let mut cfg = SearchConfig::new(args.n);
    cfg.range_mode = mode;
    cfg.seed = args.seed;
    cfg.restarts = args.restarts;
    cfg.max_iters = args.max_iters;
    cfg.symmetric = args.symmetric;
    cfg.threads = threads;
    let result = multistart(&cfg).map_err(input_err)?;
    println!("best value {:.9} (restart {})", result.best_value, result.best_restart);
    let profile: Vec<String> = result.best_profile.iter().map(|x| format!("{x:.9}")).collect();
    println!("best profile {}", profile.join(","));
    println!("step_sup {:.9}", result.step_sup);
    if let Some(path) = &args.output {
        write_file(path, &result.to_json().map_err(state_err)?)?;
    }
    if let Some(path) = &args.csv {
        write_file(path, &result.trajectories_csv())?;
    }
    reporter.write(
        json!({ "config": cfg }),
        json!({ "best_value": result.best_value, "best_profile": result.best_profile, "step_sup": result.step_sup }),
        json!({
            "upper_bound_a_n": result.best_value,
            "upper_bound_c": result.step_sup,
            "lower_bound_sigma": ScaledConstants::from_c(result.step_sup).ok().map(|s| s.sigma_value),
        }),
    )
}

fn cmd_convert(args: ConvertArgs, reporter: &Reporter) -> CmdResult {
    if let Some(c) = args.c {
        let s = ScaledConstants::from_c(c).map_err(input_err)?;
        println!("c {} sigma {:.6}", s.c_value, s.sigma_value);
        return reporter.write(json!({ "c": c }), json!(s), json!({}));
    }
    if let Some(sigma) = args.sigma {
        let s = ScaledConstants::from_sigma(sigma).map_err(input_err)?;
        println!("sigma {} c {:.6}", s.sigma_value, s.c_value);
        return reporter.write(json!({ "sigma": sigma }), json!(s), json!({}));
    }
    let (Some(n), true) = (args.n, args.profile.is_given()) else {
        return Err(Failure::input("give --c, --sigma, or --n with a profile"));
    };
    if n == 0 {
        return Err(Failure::input("n must be positive"));
    }
    let p = args.profile.load(n)?;
    let nodes = step_nodes(&p).map_err(input_err)?;
    println!("x,value");
    for node in &nodes {
        println!("{},{}", node.x, node.value);
    }
    let sup = step_sup(&p).map_err(input_err)?;
    let s = ScaledConstants::from_c(sup).map_err(input_err)?;
    println!("step_sup {sup} sigma {:.6}", s.sigma_value);
    reporter.write(
        json!({ "n": n, "coefficients": p.coeffs() }),
        json!({ "nodes": nodes, "step_sup": sup }),
        json!({ "upper_bound_c": sup, "lower_bound_sigma": s.sigma_value }),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(EXIT_INPUT);
    }
    let threads = cli.threads;
    let report_path = match &cli.command {
        Command::Eval(a) => a.report.clone(),
        Command::Certify(a) => a.report.clone(),
        Command::Search(a) => a.report.clone(),
        Command::Convert(a) => a.report.clone(),
    };
    let reporter = Reporter {
        path: report_path,
        threads,
        started: Instant::now(),
    };
    let outcome = match cli.command {
        Command::Eval(a) => cmd_eval(a, &reporter),
        Command::Certify(a) => cmd_certify(a, threads, &reporter),
        Command::Search(a) => cmd_search(a, threads, &reporter),
        Command::Convert(a) => cmd_convert(a, &reporter),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
