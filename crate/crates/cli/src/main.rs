//! `composite-prox`: solve composite problems, evaluate prox_{ω∘B}, and run
//! the synthetic benchmark suites.
//!
//! Exit codes: 0 success, 1 input or runtime error, 2 iteration cap reached
//! (or, for `bench`, at least one failed run).

mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use composite_prox::experiments::{run_benchmark, BenchConfig, Suite};
use composite_prox::fixed_point::{default_step, gram_spectrum, FixedPointMap, PicardOpial};
use composite_prox::linalg::io::{read_vector, write_vector};
use composite_prox::linalg::{DenseVector, ScaledIdentity};
use composite_prox::solver::{solve, CompositeProblem, LamRule, SolverConfig, SquareLoss, StopReason};

use spec::{LamSpec, OperatorSpec, PenaltySpec, RunManifest, VectorSpec};

const LOG_ENV: &str = "COMPOSITE_PROX_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "composite-prox",
    version,
    about = "Proximity operators of composite penalties ω∘B and accelerated solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve min ½‖Ax − y‖² + reg·ω(Bx) described by a JSON manifest.
    Solve(SolveArgs),
    /// Evaluate prox_{ω∘B}(x) with the fixed-point method.
    Prox(ProxArgs),
    /// Run a synthetic benchmark suite (overlap, tree, graph, fused).
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Path to the run manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for relative output paths (default: the manifest's directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the manifest seed (used by spectral estimates).
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock times in the trace instead of zeros.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct ProxArgs {
    /// Penalty as JSON, e.g. '{"kind":"l1","weight":0.5}'.
    #[arg(long)]
    penalty: String,
    /// B as JSON builder spec (e.g. '{"builder":"fused","d":3}') or a Matrix Market path.
    #[arg(long)]
    operator: String,
    /// Input vector file (one value per line) or inline JSON array.
    #[arg(long)]
    x: String,
    /// Step λ: "auto" or a positive number.
    #[arg(long, default_value = "auto")]
    lam: String,
    /// Output vector file.
    #[arg(long)]
    out: PathBuf,
    /// Averaging parameter κ of the Picard–Opial iteration.
    #[arg(long, default_value_t = 0.2)]
    kappa: f64,
    /// Stopping tolerance on ‖v_{k+1} − v_k‖.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Seed of the spectral estimate.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Suite: overlap, tree, graph or fused.
    suite: String,
    /// Comma-separated problem sizes (default depends on the suite).
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Runs per size (default 3, or 10 with --paper-scale).
    #[arg(long)]
    repeats: Option<usize>,
    /// Base seed; run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Use the full size grid and 10 repeats.
    #[arg(long)]
    paper_scale: bool,
    /// Record wall-clock times instead of zeros.
    #[arg(long)]
    timing: bool,
}

fn init_logging() -> Result<()> {
    let level = match std::env::var(LOG_ENV) {
        Err(std::env::VarError::NotPresent) => log::LevelFilter::Warn,
        Ok(v) => match v.as_str() {
            "quiet" => log::LevelFilter::Error,
            "info" => log::LevelFilter::Info,
            "debug" => log::LevelFilter::Debug,
            other => bail!("{LOG_ENV}: expected quiet, info or debug, got '{other}'"),
        },
        Err(e) => bail!("{LOG_ENV}: {e}"),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode> {
    let m = RunManifest::read(&args.manifest)?;
    let base = args.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let a = m.a.build(&base, "a")?;
    let b = m.b.build(&base, "b")?;
    let y = DenseVector::new(m.y.load(&base, "y")?).context("y")?;
    let penalty = m.penalty.build(&b, "penalty")?;
    let loss = match m.lipschitz {
        Some(l) => SquareLoss::with_lipschitz(a.op, y, l).context("lipschitz")?,
        None => SquareLoss::new(a.op, y).context("a, y")?,
    };
    let problem = CompositeProblem::new(loss, penalty, b.op, m.reg_weight).context("problem")?;
    let config = SolverConfig {
        spectral_seed: args.seed.unwrap_or(m.seed),
        ..m.solver.config()?
    };
    let (x, trace) = solve(&problem, &config)?;

    let out_base = args.out.clone().unwrap_or(base);
    let sol_path = resolve(
        &out_base,
        m.output.solution.as_deref().unwrap_or(Path::new("solution.txt")),
    );
    let trace_path = resolve(&out_base, m.output.trace.as_deref().unwrap_or(Path::new("trace.csv")));
    ensure_parent(&sol_path)?;
    ensure_parent(&trace_path)?;
    write_vector(&sol_path, &x)?;
    trace.write_csv(&trace_path, args.timing)?;
    println!(
        "iterations {} objective {:e} mean_inner {:.2}",
        trace.iterations(),
        trace.best_objective,
        trace.mean_inner_iters()
    );
    Ok(match trace.stop {
        StopReason::OuterCap => {
            log::warn!("outer iteration cap reached");
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    })
}

fn cmd_prox(args: &ProxArgs) -> Result<ExitCode> {
    let cwd = Path::new(".");
    let b = OperatorSpec::from_arg(&args.operator)?.build(cwd, "operator")?;
    let penalty = PenaltySpec::from_arg(&args.penalty)?.build(&b, "penalty")?;
    let x = if args.x.trim_start().starts_with('[') {
        VectorSpec::Inline(serde_json::from_str(&args.x).context("--x")?).load(cwd, "x")?
    } else {
        read_vector(&args.x).context("--x")?.into_inner()
    };
    let solver = PicardOpial::new(args.kappa, args.tol, args.max_iter).context("picard settings")?;
    let q = ScaledIdentity::identity(b.op.cols());
    let spectrum = gram_spectrum(b.op.as_ref(), &q, args.seed)?;
    let lam = match LamSpec::parse_arg(&args.lam)? {
        LamRule::Auto => default_step(&spectrum),
        LamRule::Explicit(v) => v,
    };
    let map = FixedPointMap::with_lambda_max(&penalty, b.op.as_ref(), &q, &x, lam, spectrum.lambda_max)?;
    let state = map.solve(&solver, None)?;
    let y = map.recover(&state.v);
    ensure_parent(&args.out)?;
    write_vector(&args.out, &y)?;
    println!("inner_iterations {}", state.iterations);
    println!("final_step_norm {:e}", state.final_step_norm);
    if state.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        log::warn!("fixed-point iteration reached its cap");
        Ok(ExitCode::from(2))
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let suite: Suite = args.suite.parse()?;
    let mut cfg = BenchConfig::new(suite, &args.out);
    cfg.sizes = match (&args.sizes, args.paper_scale) {
        (Some(s), _) => s.clone(),
        (None, true) => suite.paper_sizes(),
        (None, false) => suite.default_sizes(),
    };
    cfg.repeats = args.repeats.unwrap_or(if args.paper_scale { 10 } else { 3 });
    cfg.seed = args.seed;
    cfg.jobs = args.jobs;
    cfg.timing = args.timing;
    if cfg.jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    let report = run_benchmark(&cfg)?;
    let failed = report.runs.iter().filter(|r| r.outcome.is_err()).count();
    println!("summary {}", report.summary_path.display());
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", report.runs.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_logging()?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Prox(a) => cmd_prox(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(Cli::try_parse_from(["composite-prox", "solve", "--manifest", "m.json", "--bogus"]).is_err());
    }

    #[test]
    fn sizes_are_comma_separated() {
        let cli = Cli::try_parse_from(["composite-prox", "bench", "overlap", "--sizes", "100,200"]).unwrap();
        match cli.command {
            Command::Bench(b) => assert_eq!(b.sizes, Some(vec![100, 200])),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unknown_suite_errors() {
        assert!("lasso".parse::<Suite>().is_err());
    }
}
