//! JSON schemas for operators, penalties, vectors and solver settings.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use composite_prox::builders::{
    fused_difference_operator, group_selection_operator, incidence_operator, tree_group_system, Graph, GroupSystem,
};
use composite_prox::experiments::gen_overlap_groups;
use composite_prox::linalg::io::{read_matrix_market, read_vector};
use composite_prox::linalg::{ScaledIdentity, SharedOperator, SparseMatrix};
use composite_prox::prox::{PenaltyKind, ProxPenalty};
use composite_prox::solver::{LamRule, SolverConfig};
use serde::Deserialize;

/// A matrix on disk or a structured builder.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Matrix { matrix: PathBuf },
    Builder(BuilderSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuilderSpec {
    Identity {
        d: usize,
    },
    Fused {
        d: usize,
    },
    /// Explicit groups (1-based) or a groups file.
    Groups {
        d: usize,
        #[serde(default)]
        groups: Option<Vec<Vec<usize>>>,
        #[serde(default)]
        file: Option<PathBuf>,
    },
    OverlapGroups {
        d: usize,
    },
    Tree {
        branching: Vec<usize>,
    },
    /// Edges (1-based) or an edge-list file.
    Graph {
        d: usize,
        #[serde(default)]
        edges: Option<Vec<(usize, usize)>>,
        #[serde(default)]
        file: Option<PathBuf>,
    },
}

/// A built operator with the row blocks of group builders.
#[derive(Debug, Clone)]
pub struct BuiltOperator {
    pub op: SharedOperator,
    pub blocks: Option<Vec<Range<usize>>>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn from_groups(gs: &GroupSystem) -> BuiltOperator {
    let sel = group_selection_operator(gs);
    BuiltOperator {
        op: Arc::new(sel.operator),
        blocks: Some(sel.blocks),
    }
}

impl OperatorSpec {
    /// Parses inline JSON, or treats the text as a Matrix Market path.
    pub fn from_arg(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).with_context(|| format!("invalid operator spec {text}"))
        } else {
            Ok(OperatorSpec::Matrix { matrix: text.into() })
        }
    }

    pub fn build(&self, base: &Path, field: &str) -> Result<BuiltOperator> {
        let plain = |m: SparseMatrix| BuiltOperator {
            op: Arc::new(m),
            blocks: None,
        };
        Ok(match self {
            OperatorSpec::Matrix { matrix } => {
                let path = resolve(base, matrix);
                plain(read_matrix_market(&path).with_context(|| format!("{field}.matrix"))?)
            }
            OperatorSpec::Builder(b) => match b {
                BuilderSpec::Identity { d } => BuiltOperator {
                    op: Arc::new(ScaledIdentity::identity(*d)),
                    blocks: None,
                },
                BuilderSpec::Fused { d } => plain(fused_difference_operator(*d).with_context(|| format!("{field}.d"))?),
                BuilderSpec::Groups { d, groups, file } => {
                    let gs = match (groups, file) {
                        (Some(g), None) => {
                            let zero_based = g
                                .iter()
                                .map(|grp| {
                                    grp.iter()
                                        .map(|&i| {
                                            i.checked_sub(1)
                                                .ok_or_else(|| anyhow!("{field}.groups: indices are 1-based"))
                                        })
                                        .collect::<Result<Vec<usize>>>()
                                })
                                .collect::<Result<Vec<_>>>()?;
                            GroupSystem::new(*d, zero_based)
                        }
                        (None, Some(f)) => GroupSystem::read(resolve(base, f), Some(*d)),
                        _ => bail!("{field}: give exactly one of `groups` or `file`"),
                    }
                    .with_context(|| format!("{field}.groups"))?;
                    from_groups(&gs)
                }
                BuilderSpec::OverlapGroups { d } => {
                    from_groups(&gen_overlap_groups(*d).with_context(|| format!("{field}.d"))?.system)
                }
                BuilderSpec::Tree { branching } => {
                    from_groups(&tree_group_system(branching).with_context(|| format!("{field}.branching"))?)
                }
                BuilderSpec::Graph { d, edges, file } => {
                    let g = match (edges, file) {
                        (Some(e), None) => {
                            let zero_based = e
                                .iter()
                                .map(|&(a, b)| match (a.checked_sub(1), b.checked_sub(1)) {
                                    (Some(a), Some(b)) => Ok((a, b)),
                                    _ => Err(anyhow!("{field}.edges: vertices are 1-based")),
                                })
                                .collect::<Result<Vec<_>>>()?;
                            Graph::new(*d, zero_based)
                        }
                        (None, Some(f)) => Graph::read(resolve(base, f), Some(*d)),
                        _ => bail!("{field}: give exactly one of `edges` or `file`"),
                    }
                    .with_context(|| format!("{field}.edges"))?;
                    plain(incidence_operator(&g))
                }
            },
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InnerKind {
    L1,
    L2,
    Linf,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltySpec {
    L1 {
        #[serde(default = "one")]
        weight: f64,
    },
    L2 {
        #[serde(default = "one")]
        weight: f64,
    },
    Linf {
        #[serde(default = "one")]
        weight: f64,
    },
    LpPower {
        p: f64,
        #[serde(default = "one")]
        weight: f64,
    },
    LpNorm {
        p: f64,
        #[serde(default = "one")]
        weight: f64,
    },
    /// Sum of ℓ2 norms over consecutive blocks; without `sizes` the blocks
    /// of a group builder are used.
    GroupL2 {
        #[serde(default)]
        sizes: Option<Vec<usize>>,
        #[serde(default = "one")]
        weight: f64,
    },
    /// Orthogonally invariant norm of a row-major rows×cols matrix.
    Oi {
        inner: InnerKind,
        rows: usize,
        cols: usize,
        #[serde(default = "one")]
        weight: f64,
    },
}

impl PenaltySpec {
    pub fn from_arg(text: &str) -> Result<Self> {
        serde_json::from_str(text).with_context(|| format!("invalid penalty spec {text}"))
    }

    pub fn build(&self, operator: &BuiltOperator, field: &str) -> Result<ProxPenalty> {
        let p = match self {
            PenaltySpec::L1 { weight } => ProxPenalty::l1(*weight),
            PenaltySpec::L2 { weight } => ProxPenalty::l2(*weight),
            PenaltySpec::Linf { weight } => ProxPenalty::linf(*weight),
            PenaltySpec::LpPower { p, weight } => ProxPenalty::lp_power(*p, *weight),
            PenaltySpec::LpNorm { p, weight } => ProxPenalty::lp_norm(*p, *weight),
            PenaltySpec::GroupL2 { sizes, weight } => match (sizes, &operator.blocks) {
                (Some(s), _) => ProxPenalty::group_l2_from_sizes(s, *weight),
                (None, Some(blocks)) => ProxPenalty::group_l2(blocks.clone(), *weight),
                (None, None) => bail!("{field}.sizes: required unless the operator is a group builder"),
            },
            PenaltySpec::Oi {
                inner,
                rows,
                cols,
                weight,
            } => {
                let inner = match inner {
                    InnerKind::L1 => PenaltyKind::L1,
                    InnerKind::L2 => PenaltyKind::L2,
                    InnerKind::Linf => PenaltyKind::LInf,
                };
                ProxPenalty::oi_norm(inner, *rows, *cols, *weight)
            }
        };
        p.with_context(|| field.to_string())
    }
}

/// Inline values or a vector file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Inline(Vec<f64>),
    File(PathBuf),
}

impl VectorSpec {
    pub fn load(&self, base: &Path, field: &str) -> Result<Vec<f64>> {
        match self {
            VectorSpec::Inline(v) => {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    bail!("{field}[{i}] is not finite");
                }
                Ok(v.clone())
            }
            VectorSpec::File(p) => Ok(read_vector(resolve(base, p))
                .with_context(|| field.to_string())?
                .into_inner()),
        }
    }
}

/// `"auto"` or a positive number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LamSpec {
    Value(f64),
    Name(String),
}

impl LamSpec {
    pub fn parse_arg(text: &str) -> Result<LamRule> {
        if text == "auto" {
            return Ok(LamRule::Auto);
        }
        let v: f64 = text
            .parse()
            .with_context(|| format!("--lam: expected 'auto' or a number, got '{text}'"))?;
        Ok(LamRule::Explicit(v))
    }

    pub fn rule(&self, field: &str) -> Result<LamRule> {
        match self {
            LamSpec::Value(v) => Ok(LamRule::Explicit(*v)),
            LamSpec::Name(s) if s == "auto" => Ok(LamRule::Auto),
            LamSpec::Name(s) => bail!("{field}: expected \"auto\" or a number, got \"{s}\""),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub kappa: Option<f64>,
    pub lam: Option<LamSpec>,
    pub inner_tol: Option<f64>,
    pub inner_cap: Option<usize>,
    pub epsilon: Option<f64>,
    pub outer_cap: Option<usize>,
    pub window: Option<usize>,
    pub warm_start: Option<bool>,
    pub accelerated: Option<bool>,
    pub exact_prox: Option<bool>,
}

impl SolverSpec {
    pub fn config(&self) -> Result<SolverConfig> {
        let d = SolverConfig::default();
        let lam = match &self.lam {
            Some(l) => l.rule("solver.lam")?,
            None => d.lam,
        };
        let cfg = SolverConfig {
            kappa: self.kappa.unwrap_or(d.kappa),
            lam,
            inner_tol: self.inner_tol.unwrap_or(d.inner_tol),
            inner_cap: self.inner_cap.unwrap_or(d.inner_cap),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            outer_cap: self.outer_cap.unwrap_or(d.outer_cap),
            window: self.window.unwrap_or(d.window),
            warm_start: self.warm_start.unwrap_or(d.warm_start),
            accelerated: self.accelerated.unwrap_or(d.accelerated),
            exact_prox: self.exact_prox.unwrap_or(d.exact_prox),
            ..d
        };
        cfg.validate().context("solver")?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub solution: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

/// Input of `solve`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub a: OperatorSpec,
    pub y: VectorSpec,
    pub b: OperatorSpec,
    pub penalty: PenaltySpec,
    pub reg_weight: f64,
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed manifest {}", path.display()))
    }
}
