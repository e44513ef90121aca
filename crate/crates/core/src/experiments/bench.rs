use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::generators::{
    gen_cluster_graph, gen_fused_data, gen_overlap_data, gen_tree_data, FusedExperimentSpec, GraphExperimentSpec,
    OverlapExperimentSpec, TreeExperimentSpec,
};
use crate::error::{Error, Result};
use crate::linalg::io::format_scalar;
use crate::solver::{solve_accelerated, solve_proximal, CompositeProblem, SolverConfig, SolverTrace};

pub const SUMMARY_HEADER: &str =
    "d,mean_outer_iters,mean_inner_iters,mean_time_ms,mean_baseline_outer_iters,recovered,failures";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Overlap,
    Tree,
    Graph,
    Fused,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Overlap, Suite::Tree, Suite::Graph, Suite::Fused];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Overlap => "overlap",
            Suite::Tree => "tree",
            Suite::Graph => "graph",
            Suite::Fused => "fused",
        }
    }

    pub fn default_sizes(self) -> Vec<usize> {
        match self {
            Suite::Overlap => vec![100, 200, 400],
            Suite::Tree => vec![TREE_DIM],
            Suite::Graph => vec![50, 100],
            Suite::Fused => vec![100],
        }
    }

    pub fn paper_sizes(self) -> Vec<usize> {
        match self {
            Suite::Overlap => (1000..=4000).step_by(100).collect(),
            Suite::Tree => vec![TREE_DIM],
            Suite::Graph => (100..=260).step_by(20).collect(),
            Suite::Fused => vec![100],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| {
            Error::param(
                "suite",
                format!("unknown suite '{s}' (expected overlap, tree, graph or fused)"),
            )
        })
    }
}

/// Atoms in the [10, 2, 2] tree dictionary.
pub const TREE_DIM: usize = 71;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub suite: Suite,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; rayon's default when `None`.
    pub jobs: Option<usize>,
    /// Write measured times instead of zeros.
    pub timing: bool,
    pub solver: SolverConfig,
    /// Outer-iteration cap of the unaccelerated baseline.
    pub baseline_cap: usize,
}

impl BenchConfig {
    pub fn new(suite: Suite, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            suite,
            sizes: suite.default_sizes(),
            repeats: 10,
            seed: 0,
            out_dir: out_dir.into(),
            jobs: None,
            timing: false,
            solver: SolverConfig::default(),
            baseline_cap: 200_000,
        }
    }
}

/// Metrics of one completed run.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub accelerated: SolverTrace,
    /// Plain proximal gradient run until it reaches the accelerated best
    /// objective + ε, or its cap.
    pub baseline: SolverTrace,
    pub baseline_reached: bool,
    /// Sign or support recovery, where the suite defines it.
    pub recovered: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub d: usize,
    pub seed: u64,
    pub outcome: std::result::Result<RunMetrics, String>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub runs: Vec<RunRecord>,
    pub summary_path: PathBuf,
}

impl BenchReport {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.is_ok())
    }
}

/// Maps a solution to its recovery flag, `None` when the suite has none.
pub type RecoveryCheck = Box<dyn Fn(&[f64]) -> Option<bool> + Send + Sync>;

/// A generated problem plus its recovery check.
pub struct SuiteProblem {
    pub problem: CompositeProblem,
    pub recovery: RecoveryCheck,
}

/// Fraction of ‖x‖₁ on the leading `k` coordinates.
pub fn leading_mass(x: &[f64], k: usize) -> f64 {
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    x.iter().take(k).map(|v| v.abs()).sum::<f64>() / total
}

pub fn signs_match(x: &[f64], labels: &[f64]) -> bool {
    x.len() == labels.len() && x.iter().zip(labels).all(|(v, l)| v.signum() == l.signum() && *v != 0.0)
}

/// Builds the suite's problem for one (d, seed).
pub fn suite_problem(suite: Suite, d: usize, seed: u64) -> Result<SuiteProblem> {
    Ok(match suite {
        Suite::Overlap => {
            let spec = OverlapExperimentSpec::new(d, seed);
            let support = spec.support;
            let inst = gen_overlap_data(&spec)?;
            SuiteProblem {
                problem: inst.problem,
                recovery: Box::new(move |x| Some(leading_mass(x, support) >= 0.99)),
            }
        }
        Suite::Tree => {
            if d != TREE_DIM {
                return Err(Error::param(
                    "d",
                    format!("tree suite has fixed dimension {TREE_DIM}, got {d}"),
                ));
            }
            let inst = gen_tree_data(&TreeExperimentSpec::new(seed))?;
            SuiteProblem {
                problem: inst.problem,
                recovery: Box::new(|_| None),
            }
        }
        Suite::Graph => {
            let inst = gen_cluster_graph(&GraphExperimentSpec::new(d, seed))?;
            let labels = inst.labels;
            SuiteProblem {
                problem: inst.problem,
                recovery: Box::new(move |x| Some(signs_match(x, &labels))),
            }
        }
        Suite::Fused => {
            let inst = gen_fused_data(&FusedExperimentSpec::new(d, seed))?;
            let labels = inst.labels;
            SuiteProblem {
                problem: inst.problem,
                recovery: Box::new(move |x| Some(signs_match(x, &labels))),
            }
        }
    })
}

/// Accelerated solve followed by the baseline chasing the same objective.
pub fn run_single(suite: Suite, d: usize, seed: u64, solver: &SolverConfig, baseline_cap: usize) -> Result<RunMetrics> {
    let sp = suite_problem(suite, d, seed)?;
    let acc_cfg = SolverConfig {
        accelerated: true,
        target_objective: None,
        ..solver.clone()
    };
    let (x, accelerated) = solve_accelerated(&sp.problem, &acc_cfg)?;
    let target = accelerated.best_objective + solver.epsilon;
    let base_cfg = SolverConfig {
        accelerated: false,
        target_objective: Some(target),
        outer_cap: baseline_cap,
        ..solver.clone()
    };
    let (_, baseline) = solve_proximal(&sp.problem, &base_cfg)?;
    let baseline_reached = baseline.best_objective <= target;
    Ok(RunMetrics {
        recovered: (sp.recovery)(x.as_slice()),
        accelerated,
        baseline,
        baseline_reached,
    })
}

fn run_dir(out: &Path, suite: Suite, d: usize, seed: u64) -> PathBuf {
    out.join(suite.name()).join(format!("d{d}_seed{seed}"))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summary_csv(runs: &[RunRecord], sizes: &[usize], timing: bool) -> String {
    let mut s = String::new();
    s.push_str(SUMMARY_HEADER);
    s.push('\n');
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), format_scalar);
    for &d in sizes {
        let ok: Vec<&RunMetrics> = runs
            .iter()
            .filter(|r| r.d == d)
            .filter_map(|r| r.outcome.as_ref().ok())
            .collect();
        let failures = runs.iter().filter(|r| r.d == d && r.outcome.is_err()).count();
        let outer = mean(ok.iter().map(|m| m.accelerated.iterations() as f64));
        let inner = mean(ok.iter().map(|m| m.accelerated.mean_inner_iters()));
        let time = if timing {
            mean(ok.iter().map(|m| m.accelerated.total_time_ms())).map(|t| format!("{t:.3}"))
        } else {
            ok.first().map(|_| "0".to_string())
        };
        let base = mean(ok.iter().map(|m| m.baseline.iterations() as f64));
        let flags: Vec<bool> = ok.iter().filter_map(|m| m.recovered).collect();
        let recovered = if flags.is_empty() {
            "na"
        } else if flags.iter().all(|f| *f) {
            "true"
        } else {
            "false"
        };
        let _ = writeln!(
            s,
            "{d},{},{},{},{},{recovered},{failures}",
            opt(outer),
            opt(inner),
            time.unwrap_or_else(|| "nan".into()),
            opt(base)
        );
    }
    s
}

/// Runs every (size, repeat) pair, writing per-run traces under
/// `<out>/<suite>/d<d>_seed<s>/` and `<out>/<suite>/summary.csv`.
///
/// Run seeds are `seed + repeat`; failures are recorded and the suite
/// continues. Output bytes do not depend on `jobs`.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.repeats == 0 {
        return Err(Error::param("repeats", "must be at least 1"));
    }
    if cfg.sizes.is_empty() {
        return Err(Error::param("sizes", "must list at least one size"));
    }
    cfg.solver.validate()?;
    let suite_dir = cfg.out_dir.join(cfg.suite.name());
    fs::create_dir_all(&suite_dir).map_err(|e| Error::io(&suite_dir, e))?;

    let mut sizes = cfg.sizes.clone();
    let mut seen = std::collections::HashSet::new();
    sizes.retain(|d| seen.insert(*d));
    let tasks: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&d| (0..cfg.repeats as u64).map(move |r| (d, cfg.seed.wrapping_add(r))))
        .collect();

    let work = || -> Vec<RunRecord> {
        tasks
            .par_iter()
            .map(|&(d, seed)| {
                log::info!("{} d={d} seed={seed}: start", cfg.suite);
                let outcome = run_single(cfg.suite, d, seed, &cfg.solver, cfg.baseline_cap)
                    .and_then(|m| {
                        let dir = run_dir(&cfg.out_dir, cfg.suite, d, seed);
                        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                        m.accelerated.write_csv(dir.join("trace.csv"), cfg.timing)?;
                        m.baseline.write_csv(dir.join("baseline_trace.csv"), cfg.timing)?;
                        Ok(m)
                    })
                    .map_err(|e| {
                        log::warn!("{} d={d} seed={seed}: {e}", cfg.suite);
                        e.to_string()
                    });
                RunRecord { d, seed, outcome }
            })
            .collect()
    };
    let runs = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::param("jobs", e.to_string()))?
            .install(work),
        None => work(),
    };

    let summary_path = suite_dir.join("summary.csv");
    fs::write(&summary_path, summary_csv(&runs, &sizes, cfg.timing)).map_err(|e| Error::io(&summary_path, e))?;
    Ok(BenchReport { runs, summary_path })
}
