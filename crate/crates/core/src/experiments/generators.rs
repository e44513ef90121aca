use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::builders::{
    fused_difference_operator, group_selection_operator, incidence_operator, tree_group_system, Graph, GroupSystem,
};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector, ScaledIdentity, SparseMatrix};
use crate::prox::ProxPenalty;
use crate::solver::{CompositeProblem, SquareLoss};

/// RNG stream for one (seed, dimension) pair.
pub fn rng_for(seed: u64, d: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(d as u64);
    rng
}

fn normal(sd: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sd).map_err(|e| Error::param("noise_sd", e.to_string()))
}

fn check_noise(sd: f64) -> Result<()> {
    if !(sd >= 0.0) || !sd.is_finite() {
        return Err(Error::param("noise_sd", format!("must be non-negative, got {sd}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapGroups {
    pub system: GroupSystem,
    /// True when d − 70 is not a multiple of 10 and the last block is short.
    pub truncated: bool,
}

/// The chain/star template on coordinates 1..70 followed by disjoint blocks
/// of 10 (stored 0-based).
pub fn gen_overlap_groups(d: usize) -> Result<OverlapGroups> {
    if d < 80 {
        return Err(Error::param("d", format!("overlap groups need d ≥ 80, got {d}")));
    }
    let range = |a: usize, b: usize| (a - 1..b).collect::<Vec<usize>>();
    let mut groups: Vec<Vec<usize>> = (0..5).map(|k| range(1 + 4 * k, 5 + 4 * k)).collect();
    groups.push([vec![3], range(22, 30)].concat());
    for k in 0..4 {
        let lo = 31 + 10 * k;
        groups.push([vec![7 + 4 * k], range(lo, lo + 9)].concat());
    }
    let mut start = 71;
    while start <= d {
        groups.push(range(start, (start + 9).min(d)));
        start += 10;
    }
    let truncated = !(d - 70).is_multiple_of(10);
    if truncated {
        log::warn!("d = {d}: last overlap block has {} coordinates", (d - 70) % 10);
    }
    Ok(OverlapGroups {
        system: GroupSystem::new(d, groups)?,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapExperimentSpec {
    pub d: usize,
    pub seed: u64,
    pub noise_sd: f64,
    pub reg_weight: f64,
    /// Leading coordinates carrying the signal.
    pub support: usize,
    /// Scale each column of A to unit ℓ2 norm.
    pub normalize_columns: bool,
}

impl OverlapExperimentSpec {
    pub fn new(d: usize, seed: u64) -> Self {
        Self {
            d,
            seed,
            noise_sd: 0.001,
            reg_weight: 1e-5,
            support: 21,
            normalize_columns: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OverlapInstance {
    pub problem: CompositeProblem,
    pub x_star: Vec<f64>,
    pub groups: OverlapGroups,
}

/// A ∈ R^{⌊0.7d⌋×d} uniform on [0, 1), x* on the leading `support`
/// coordinates divided by their group-membership counts, y = Ax* + noise.
pub fn gen_overlap_data(spec: &OverlapExperimentSpec) -> Result<OverlapInstance> {
    check_noise(spec.noise_sd)?;
    let groups = gen_overlap_groups(spec.d)?;
    if spec.support > spec.d {
        return Err(Error::param(
            "support",
            format!("{} exceeds d = {}", spec.support, spec.d),
        ));
    }
    let d = spec.d;
    let s = (7 * d) / 10;
    let mut rng = rng_for(spec.seed, d);
    let data: Vec<f64> = (0..s * d).map(|_| rng.random::<f64>()).collect();
    let mut a = DenseMatrix::from_row_major(s, d, data)?;
    if spec.normalize_columns {
        a.normalize_columns();
    }
    let counts = groups.system.memberships();
    let mut x_star = vec![0.0; d];
    for (j, x) in x_star.iter_mut().take(spec.support).enumerate() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *x = z / counts[j] as f64;
    }
    let noise = normal(spec.noise_sd)?;
    let mut y = vec![0.0; s];
    for (i, yi) in y.iter_mut().enumerate() {
        let row = a.row(i);
        *yi = row.iter().zip(&x_star).map(|(p, q)| p * q).sum::<f64>() + noise.sample(&mut rng);
    }
    let sel = group_selection_operator(&groups.system);
    let penalty = sel.penalty(1.0)?;
    let loss = SquareLoss::new(Arc::new(a), DenseVector::new(y)?)?;
    let problem = CompositeProblem::new(loss, penalty, Arc::new(sel.operator), spec.reg_weight)?;
    Ok(OverlapInstance {
        problem,
        x_star,
        groups,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphExperimentSpec {
    /// Even vertex count; vertices 0..d/2 form the first cluster.
    pub d: usize,
    pub seed: u64,
    pub labeled: usize,
    pub edge_prob: f64,
    /// Number of cross-cluster edges; ⌊d/25⌋ when `None`.
    pub cross_pairs: Option<usize>,
    pub reg_weight: f64,
}

impl GraphExperimentSpec {
    pub fn new(d: usize, seed: u64) -> Self {
        Self {
            d,
            seed,
            labeled: 10,
            edge_prob: 0.5,
            cross_pairs: None,
            reg_weight: 0.1,
        }
    }

    pub fn cross_pair_count(&self) -> usize {
        self.cross_pairs.unwrap_or(self.d / 25)
    }
}

#[derive(Debug, Clone)]
pub struct GraphInstance {
    pub problem: CompositeProblem,
    pub graph: Graph,
    /// +1 on the first cluster, −1 on the second.
    pub labels: Vec<f64>,
    /// Observed vertices, in the row order of A.
    pub labeled: Vec<usize>,
}

/// Two equal clusters with intra-cluster edges drawn with `edge_prob` and
/// ⌊d/25⌋ random cross edges.
pub fn gen_cluster_graph_structure(spec: &GraphExperimentSpec, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let d = spec.d;
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::param("d", format!("cluster graph needs an even d ≥ 2, got {d}")));
    }
    if !(0.0..=1.0).contains(&spec.edge_prob) {
        return Err(Error::param(
            "edge_prob",
            format!("must lie in [0, 1], got {}", spec.edge_prob),
        ));
    }
    let half = d / 2;
    let cross = spec.cross_pair_count();
    if cross > half * half {
        return Err(Error::param(
            "cross_pairs",
            format!("{cross} exceeds {} possible pairs", half * half),
        ));
    }
    let mut edges = Vec::new();
    for base in [0, half] {
        for i in base..base + half {
            for j in i + 1..base + half {
                if rng.random::<f64>() < spec.edge_prob {
                    edges.push((i, j));
                }
            }
        }
    }
    for k in sample(rng, half * half, cross) {
        edges.push((k / half, half + k % half));
    }
    Graph::new(d, edges)
}

pub fn cluster_labels(d: usize) -> Vec<f64> {
    (0..d).map(|i| if i < d / 2 { 1.0 } else { -1.0 }).collect()
}

/// Square loss on `labeled` randomly drawn vertices (redrawn until both
/// clusters are represented) plus reg_weight · ‖incidence · x‖₁.
pub fn gen_cluster_graph(spec: &GraphExperimentSpec) -> Result<GraphInstance> {
    let d = spec.d;
    let mut rng = rng_for(spec.seed, d);
    let graph = gen_cluster_graph_structure(spec, &mut rng)?;
    if spec.labeled == 0 || spec.labeled > d {
        return Err(Error::param(
            "labeled",
            format!("must lie in 1..={d}, got {}", spec.labeled),
        ));
    }
    let labels = cluster_labels(d);
    let need_both = spec.labeled >= 2;
    let labeled = loop {
        let mut idx = sample(&mut rng, d, spec.labeled).into_vec();
        idx.sort_unstable();
        let first = idx.iter().filter(|&&i| i < d / 2).count();
        if !need_both || (first > 0 && first < idx.len()) {
            break idx;
        }
    };
    let a = SparseMatrix::from_triplets(labeled.len(), d, labeled.iter().enumerate().map(|(r, &c)| (r, c, 1.0)))?;
    let y: Vec<f64> = labeled.iter().map(|&i| labels[i]).collect();
    let b = incidence_operator(&graph);
    let loss = SquareLoss::with_lipschitz(Arc::new(a), DenseVector::new(y)?, 1.0)?;
    let problem = CompositeProblem::new(loss, ProxPenalty::l1(1.0)?, Arc::new(b), spec.reg_weight)?;
    Ok(GraphInstance {
        problem,
        graph,
        labels,
        labeled,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedExperimentSpec {
    pub d: usize,
    pub seed: u64,
    pub noise_sd: f64,
    pub reg_weight: f64,
}

impl FusedExperimentSpec {
    pub fn new(d: usize, seed: u64) -> Self {
        Self {
            d,
            seed,
            noise_sd: 0.25,
            reg_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FusedInstance {
    pub problem: CompositeProblem,
    pub labels: Vec<f64>,
}

/// Fused-lasso denoising of the two-cluster labels: A = I, y = labels + noise,
/// B the chain difference operator.
pub fn gen_fused_data(spec: &FusedExperimentSpec) -> Result<FusedInstance> {
    check_noise(spec.noise_sd)?;
    let d = spec.d;
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::param("d", format!("fused suite needs an even d ≥ 2, got {d}")));
    }
    let mut rng = rng_for(spec.seed, d);
    let labels = cluster_labels(d);
    let noise = normal(spec.noise_sd)?;
    let y: Vec<f64> = labels.iter().map(|l| l + noise.sample(&mut rng)).collect();
    let loss = SquareLoss::with_lipschitz(Arc::new(ScaledIdentity::identity(d)), DenseVector::new(y)?, 1.0)?;
    let b = fused_difference_operator(d)?;
    let problem = CompositeProblem::new(loss, ProxPenalty::l1(1.0)?, Arc::new(b), spec.reg_weight)?;
    Ok(FusedInstance { problem, labels })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeExperimentSpec {
    pub branching: Vec<usize>,
    /// Rows of the dictionary (pixels per patch).
    pub signal_dim: usize,
    pub seed: u64,
    /// Root-to-leaf paths active in the test signal.
    pub paths: usize,
    pub noise_sd: f64,
    pub reg_weight: f64,
}

impl TreeExperimentSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            branching: vec![10, 2, 2],
            signal_dim: 256,
            seed,
            paths: 2,
            noise_sd: 0.01,
            reg_weight: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeInstance {
    pub problem: CompositeProblem,
    pub x_star: Vec<f64>,
    pub groups: GroupSystem,
}

/// Gaussian dictionary with unit columns, one atom per tree node, and a
/// signal combining the atoms on a few root-to-leaf paths.
pub fn gen_tree_data(spec: &TreeExperimentSpec) -> Result<TreeInstance> {
    check_noise(spec.noise_sd)?;
    let groups = tree_group_system(&spec.branching)?;
    let d = groups.dim();
    let n = spec.signal_dim;
    if n == 0 {
        return Err(Error::param("signal_dim", "must be positive"));
    }
    let mut rng = rng_for(spec.seed, d);
    let data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut a = DenseMatrix::from_row_major(n, d, data)?;
    a.normalize_columns();

    // the group of node k is its subtree; a node's ancestors are the nodes
    // whose groups contain it
    let leaves: Vec<usize> = (0..d).filter(|&k| groups.groups()[k].len() == 1).collect();
    let mut x_star = vec![0.0; d];
    for &leaf in sample(&mut rng, leaves.len(), spec.paths.min(leaves.len()))
        .iter()
        .map(|i| &leaves[i])
    {
        for (k, g) in groups.groups().iter().enumerate() {
            if g.binary_search(&leaf).is_ok() && x_star[k] == 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                x_star[k] = z.signum() * (1.0 + z.abs());
            }
        }
    }
    let noise = normal(spec.noise_sd)?;
    let mut y = vec![0.0; n];
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = a.row(i).iter().zip(&x_star).map(|(p, q)| p * q).sum::<f64>() + noise.sample(&mut rng);
    }
    let sel = group_selection_operator(&groups);
    let penalty = sel.penalty(1.0)?;
    let loss = SquareLoss::new(Arc::new(a), DenseVector::new(y)?)?;
    let problem = CompositeProblem::new(loss, penalty, Arc::new(sel.operator), spec.reg_weight)?;
    Ok(TreeInstance {
        problem,
        x_star,
        groups,
    })
}
