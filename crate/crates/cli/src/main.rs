//! `legs`: simulate LegS discretizations, inspect quadrature weights,
//! reconstruct signals and run convergence studies.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical or
//! oracle failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hippo_legs::harness::{study_signal, ExperimentConfig};
use hippo_legs::io::fmt_f64;
use hippo_legs::reconstruct::{reconstruction_curve, write_curve_csv, GRID_POINTS};
use hippo_legs::{
    corpus_signal, exact_state, extract_weights, reconstruction_error, run_with_start, LegSSystem, LegsError, Mesh,
    Scheme, Signal, SignalSpec, StartRule, CORPUS,
};

#[derive(Parser)]
#[command(name = "legs", version, about = "HiPPO-LegS discretization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme on one signal and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Write the quadrature weights of a scheme next to their limit F.
    Weights(WeightsArgs),
    /// Decode a state back into a function and measure the error.
    Reconstruct(ReconstructArgs),
    /// Run a convergence study described by a JSON config.
    Convergence(ConvergenceArgs),
    /// Dump A, B, V, V^-1, D and d as CSV.
    DumpSystem(DumpArgs),
    /// List the built-in signals.
    ListSignals,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SignalSource {
    /// Built-in signal name (see `list-signals`).
    #[arg(long)]
    signal: Option<String>,
    /// JSON file holding a signal name or a polynomial/sinusoid descriptor.
    #[arg(long)]
    signal_file: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SignalSource,
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Start forward Euler and bilinear from c'(0) (needs a known f'(0)).
    #[arg(long)]
    initial_derivative: bool,
    /// Oracle tolerance for the terminal error (default by regularity).
    #[arg(long)]
    oracle_tol: Option<f64>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    source: SignalSource,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Decode the terminal state of this scheme instead of the oracle state.
    #[arg(long, requires = "steps")]
    scheme: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = GRID_POINTS)]
    points: usize,
    #[arg(long)]
    oracle_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory for per-signal CSVs and summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<LegsError> for Failure {
    fn from(e: LegsError) -> Self {
        Failure { code: if e.is_numerical() { 3 } else { 2 }, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CmdResult = Result<ExitCode, Failure>;

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// The summary goes to stdout unless stdout already carries the CSV.
fn summary(csv_on_stdout: bool, line: &str) {
    if csv_on_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

fn resolve_signal(source: &SignalSource) -> Result<Signal, Failure> {
    match (&source.signal, &source.signal_file) {
        (Some(name), _) => Ok(corpus_signal(name)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let spec: SignalSpec = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Ok(spec.resolve()?)
        }
        (None, None) => Err(usage("one of --signal or --signal-file is required")),
    }
}

fn parse_scheme(name: &str) -> Result<Scheme, Failure> {
    Ok(name.parse::<Scheme>()?)
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

fn simulate(args: SimulateArgs) -> CmdResult {
    let signal = resolve_signal(&args.source)?;
    let scheme = parse_scheme(&args.scheme)?;
    let system = LegSSystem::new(args.dim)?;
    let mesh = Mesh::new(args.steps, args.horizon)?;
    signal.check_horizon(args.horizon)?;
    let start = if args.initial_derivative {
        let fp = signal
            .fprime0()
            .ok_or_else(|| usage(format!("signal `{}` has no known f'(0)", signal.label())))?;
        StartRule::InitialDerivative(fp)
    } else {
        StartRule::ZeroOut
    };
    let tol = args.oracle_tol.unwrap_or_else(|| signal.regularity().default_tolerance());

    let traj = run_with_start(&system, &signal, scheme, mesh, start)?;
    let mut w = open_output(args.out.as_deref())?;
    traj.write_csv(&mut w)?;
    w.flush()?;

    let stdout_csv = args.out.is_none();
    let head = format!(
        "simulate signal={} scheme={scheme} N={} n={} T={} terminal={}",
        signal.label(),
        args.dim,
        args.steps,
        args.horizon,
        fmt_vec(traj.terminal())
    );
    let exact = exact_state(&system, &signal, args.horizon, tol)?;
    if exact.converged {
        let err = traj.terminal().iter().zip(&exact.c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        summary(stdout_csv, &format!("{head} terminal_error={}", fmt_f64(err)));
        Ok(ExitCode::SUCCESS)
    } else {
        summary(stdout_csv, &head);
        eprintln!(
            "oracle did not reach tolerance {tol:e} (estimate {:e}); terminal error omitted",
            exact.tol
        );
        Ok(ExitCode::from(3))
    }
}

fn weights(args: WeightsArgs) -> CmdResult {
    let scheme = parse_scheme(&args.scheme)?;
    let system = LegSSystem::new(args.dim)?;
    if args.steps < 2 {
        return Err(usage(format!("--steps must be at least 2, got {}", args.steps)));
    }
    let table = extract_weights(&system, scheme, args.steps)?;
    let mut w = open_output(args.out.as_deref())?;
    table.write_csv(&system, &mut w)?;
    w.flush()?;
    summary(
        args.out.is_none(),
        &format!(
            "weights scheme={scheme} N={} n={} max_interior_deviation={} max_abs_weight={}",
            args.dim,
            args.steps,
            fmt_f64(table.deviation(&system)),
            fmt_f64(table.max_abs())
        ),
    );
    Ok(ExitCode::SUCCESS)
}

fn reconstruct_cmd(args: ReconstructArgs) -> CmdResult {
    let signal = resolve_signal(&args.source)?;
    let system = LegSSystem::new(args.dim)?;
    if !(args.horizon.is_finite() && args.horizon > 0.0) {
        return Err(usage(format!("--horizon must be positive, got {}", args.horizon)));
    }
    signal.check_horizon(args.horizon)?;
    if args.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let tol = args.oracle_tol.unwrap_or_else(|| signal.regularity().default_tolerance());
    let (state, source) = match (&args.scheme, args.steps) {
        (Some(name), Some(steps)) => {
            let scheme = parse_scheme(name)?;
            let mesh = Mesh::new(steps, args.horizon)?;
            let traj = run_with_start(&system, &signal, scheme, mesh, StartRule::ZeroOut)?;
            (traj.terminal().to_vec(), format!("{scheme}/{steps}"))
        }
        _ => {
            let exact = exact_state(&system, &signal, args.horizon, tol)?.require_converged(signal.label(), tol)?;
            (exact.c, "oracle".to_string())
        }
    };
    let rows = reconstruction_curve(&system, &signal, &state, args.horizon, args.points)?;
    let mut w = open_output(args.out.as_deref())?;
    write_curve_csv(&rows, &mut w)?;
    w.flush()?;
    let report = reconstruction_error(&system, &signal, &state, args.horizon, tol)?;
    summary(
        args.out.is_none(),
        &format!(
            "reconstruct signal={} state={source} N={} T={} l2_error={} sup_grid_error={}",
            signal.label(),
            args.dim,
            args.horizon,
            fmt_f64(report.l2_error),
            fmt_f64(report.sup_grid_error)
        ),
    );
    Ok(ExitCode::SUCCESS)
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn convergence(args: ConvergenceArgs) -> CmdResult {
    let config = ExperimentConfig::from_path(&args.config)?;
    let signals: Vec<Signal> = config.signal.specs().into_iter().map(|s| s.resolve()).collect::<Result<_, _>>()?;
    for s in &signals {
        s.check_horizon(config.horizon)?;
    }
    std::fs::create_dir_all(&args.out)?;

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for signal in &signals {
        match study_signal(&config, signal) {
            Ok(report) => {
                let path = args.out.join(format!("{}.csv", file_stem(&report.signal)));
                let mut w = BufWriter::new(File::create(&path)?);
                report.write_csv(&mut w)?;
                w.flush()?;
                reports.push(report);
            }
            Err(e) if e.is_numerical() => {
                eprintln!("{}: {e}", signal.label());
                failures.push(serde_json::json!({ "signal": signal.label(), "error": e.to_string() }));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let summary_json = serde_json::to_string_pretty(&reports).map_err(|e| usage(e.to_string()))?;
    std::fs::write(args.out.join("summary.json"), summary_json + "\n")?;
    let slopes: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            r.schemes.iter().map(move |s| {
                let slope = s.fitted_slope.map_or_else(|| "nan".to_string(), |v| format!("{v:.4}"));
                format!("{}/{}={slope}", r.signal, s.scheme)
            })
        })
        .collect();
    println!("convergence signals={} failed={} slopes={}", reports.len(), failures.len(), slopes.join(","));

    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        let manifest = serde_json::to_string_pretty(&failures).map_err(|e| usage(e.to_string()))?;
        std::fs::write(args.out.join("failures.json"), manifest + "\n")?;
        Ok(ExitCode::from(3))
    }
}

fn dump_system(args: DumpArgs) -> CmdResult {
    let system = LegSSystem::new(args.dim)?;
    let mut w = open_output(args.out.as_deref())?;
    writeln!(w, "matrix,i,j,value")?;
    let n = system.dim();
    for (name, m) in [("A", system.a()), ("V", system.v()), ("Vinv", system.v_inv())] {
        for i in 0..n {
            for j in 0..n {
                writeln!(w, "{name},{},{},{}", i + 1, j + 1, fmt_f64(m[(i, j)]))?;
            }
        }
    }
    for (name, v) in [("B", system.b()), ("D", system.eigenvalues()), ("d", system.d())] {
        for (i, x) in v.iter().enumerate() {
            writeln!(w, "{name},{},1,{}", i + 1, fmt_f64(*x))?;
        }
    }
    w.flush()?;
    summary(
        args.out.is_none(),
        &format!(
            "dump-system N={n} eigen_residual={} inverse_residual={}",
            fmt_f64(system.eigen_residual()),
            fmt_f64(system.inverse_residual())
        ),
    );
    Ok(ExitCode::SUCCESS)
}

fn list_signals() -> CmdResult {
    println!("name,regularity,singular_points,domain_end,fprime0");
    for name in CORPUS {
        let s = corpus_signal(name)?;
        let points = s.singular_points().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";");
        let fp = s.fprime0().map_or_else(String::new, |v| v.to_string());
        println!("{name},{},{points},{},{fp}", s.regularity(), s.domain_end());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Weights(a) => weights(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Convergence(a) => convergence(a),
        Command::DumpSystem(a) => dump_system(a),
        Command::ListSignals => list_signals(),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
