//! Structured operators B for composite penalties ω(Bx): stacked group
//! selections, first-order differences, graph incidence matrices, and the
//! subtree groups of a balanced tree.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::prox::ProxPenalty;

/// A family of (possibly overlapping) coordinate groups covering 0..d.
/// Indices are 0-based in memory and 1-based on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSystem {
    d: usize,
    groups: Vec<Vec<usize>>,
}

impl GroupSystem {
    pub fn new(d: usize, mut groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut covered = vec![false; d];
        for (k, g) in groups.iter_mut().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidGroups(format!("group {k} is empty")));
            }
            g.sort_unstable();
            if g.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGroups(format!("group {k} repeats an index")));
            }
            if let Some(&bad) = g.iter().find(|&&i| i >= d) {
                return Err(Error::InvalidGroups(format!(
                    "group {k} has index {} outside 1..={d}",
                    bad + 1
                )));
            }
            for &i in g.iter() {
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidGroups(format!(
                "coordinate {} is not in any group",
                i + 1
            )));
        }
        Ok(Self { d, groups })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// m = Σ |J_ℓ|, the row count of the selection operator.
    pub fn total_size(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// How many groups contain each coordinate.
    pub fn memberships(&self) -> Vec<usize> {
        let mut counts = vec![0; self.d];
        for g in &self.groups {
            for &i in g {
                counts[i] += 1;
            }
        }
        counts
    }

    /// Σ_ℓ ‖x_{J_ℓ}‖₂ evaluated directly.
    pub fn group_norm_sum(&self, x: &[f64]) -> f64 {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt())
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            let line: Vec<String> = g.iter().map(|i| (i + 1).to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses one group per line; `d` defaults to the largest index seen.
    pub fn parse(text: &str, d: Option<usize>, path: &Path) -> Result<Self> {
        let mut groups = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let g = line
                .split_whitespace()
                .map(|t| match t.parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        msg: format!("bad 1-based index `{t}`"),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            groups.push(g);
        }
        let d = d.unwrap_or_else(|| groups.iter().flatten().map(|i| i + 1).max().unwrap_or(0));
        Self::new(d, groups)
    }

    pub fn read(path: impl AsRef<Path>, d: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, d, path)
    }
}

/// The stacked selection operator of a group system with its row blocks.
#[derive(Debug, Clone)]
pub struct GroupSelection {
    pub operator: SparseMatrix,
    /// Row range of each group's block inside Bx.
    pub blocks: Vec<Range<usize>>,
}

impl GroupSelection {
    /// Σ_ℓ weight·‖(Bx)_ℓ‖₂ on the stacked blocks.
    pub fn penalty(&self, weight: f64) -> Result<ProxPenalty> {
        ProxPenalty::group_l2(self.blocks.clone(), weight)
    }
}

/// B = [B₁; …; B_k] where row i of B_ℓ selects the i-th smallest index of J_ℓ.
pub fn group_selection_operator(gs: &GroupSystem) -> GroupSelection {
    let mut triplets = Vec::with_capacity(gs.total_size());
    let mut blocks = Vec::with_capacity(gs.len());
    let mut row = 0;
    for g in gs.groups() {
        let start = row;
        for &j in g {
            triplets.push((row, j, 1.0));
            row += 1;
        }
        blocks.push(start..row);
    }
    let operator = SparseMatrix::from_triplets(row, gs.dim(), triplets).expect("indices validated");
    GroupSelection { operator, blocks }
}

/// (d−1) × d first-order differences: (Bx)_i = x_i − x_{i+1}.
pub fn fused_difference_operator(d: usize) -> Result<SparseMatrix> {
    if d < 2 {
        return Err(Error::param("d", format!("fused differences need d >= 2, got {d}")));
    }
    SparseMatrix::from_triplets(d - 1, d, (0..d - 1).flat_map(|i| [(i, i, 1.0), (i, i + 1, -1.0)]))
}

/// Simple undirected graph on vertices 0..d, edges stored as (i, j), i < j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    d: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Edges may be given in either orientation; they are stored with the
    /// smaller endpoint first, in input order.
    pub fn new(d: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut out = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= d || b >= d {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) out of range for {d} vertices",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", a + 1)));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            out.push(e);
        }
        Ok(Self { d, edges: out })
    }

    pub fn vertex_count(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.edges {
            let _ = writeln!(out, "{} {}", a + 1, b + 1);
        }
        out
    }

    /// One 1-based `i j` pair per line; `d` defaults to the largest vertex.
    pub fn parse(text: &str, d: Option<usize>, path: &Path) -> Result<Self> {
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("expected `i j` with 1-based vertices, got `{line}`"),
            };
            if fields.len() != 2 {
                return Err(bad());
            }
            let a: usize = fields[0].parse().map_err(|_| bad())?;
            let b: usize = fields[1].parse().map_err(|_| bad())?;
            if a == 0 || b == 0 {
                return Err(bad());
            }
            edges.push((a - 1, b - 1));
        }
        let d = d.unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
        Self::new(d, edges)
    }

    pub fn read(path: impl AsRef<Path>, d: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, d, path)
    }
}

/// |E| × d incidence matrix, +1 at the smaller endpoint and −1 at the larger.
pub fn incidence_operator(g: &Graph) -> SparseMatrix {
    SparseMatrix::from_triplets(
        g.edges.len(),
        g.d,
        g.edges
            .iter()
            .enumerate()
            .flat_map(|(r, &(a, b))| [(r, a, 1.0), (r, b, -1.0)]),
    )
    .expect("edges validated")
}

/// Balanced tree with the given per-level branching factors (top to bottom).
/// Nodes are numbered breadth-first from the root; each node owns one
/// coordinate and contributes the group of its whole subtree.
pub fn tree_group_system(branching: &[usize]) -> Result<GroupSystem> {
    if branching.is_empty() || branching.contains(&0) {
        return Err(Error::param("branching", "must be nonempty with all factors >= 1"));
    }
    // parent of each node, BFS order
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut level: Vec<usize> = vec![0];
    for &b in branching {
        let mut next = Vec::with_capacity(level.len() * b);
        for &p in &level {
            for _ in 0..b {
                next.push(parent.len());
                parent.push(Some(p));
            }
        }
        level = next;
    }
    let n = parent.len();
    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    // children have larger BFS numbers, so a reverse sweep sees them first
    for i in (1..n).rev() {
        let p = parent[i].expect("non-root");
        let sub = std::mem::take(&mut groups[i]);
        groups[p].extend_from_slice(&sub);
        groups[i] = sub;
    }
    GroupSystem::new(n, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{LinearOperator, OuterGram};

    #[test]
    fn selection_examples() {
        let gs = GroupSystem::new(3, vec![vec![0, 1, 2]]).unwrap();
        let sel = group_selection_operator(&gs);
        assert_eq!(sel.operator.to_dense(), crate::linalg::DenseMatrix::identity(3));

        let dup = GroupSystem::new(1, vec![vec![0], vec![0]]).unwrap();
        let sel = group_selection_operator(&dup);
        assert_eq!(sel.operator.apply(&[4.0]).unwrap().as_slice(), &[4.0, 4.0]);

        let gs = GroupSystem::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let sel = group_selection_operator(&gs);
        let (a, b, c) = (1.5, -2.0, 7.0);
        // explicit product against the dense 0/1 matrix
        let dense = sel.operator.to_dense();
        let x = [a, b, c];
        let oracle: Vec<f64> = (0..4).map(|i| (0..3).map(|j| dense[(i, j)] * x[j]).sum()).collect();
        assert_eq!(oracle, vec![a, b, b, c]);
        assert_eq!(sel.operator.apply(&x).unwrap().as_slice(), &[a, b, b, c]);
        assert_eq!(sel.blocks, vec![0..2, 2..4]);
    }

    #[test]
    fn group_system_validation() {
        assert!(GroupSystem::new(3, vec![vec![0, 1]]).is_err());
        assert!(GroupSystem::new(2, vec![vec![0, 1], vec![]]).is_err());
        assert!(GroupSystem::new(2, vec![vec![0, 2]]).is_err());
        assert!(GroupSystem::new(2, vec![vec![1, 1, 0]]).is_err());
        let gs = GroupSystem::new(2, vec![vec![1, 0]]).unwrap();
        assert_eq!(gs.groups()[0], vec![0, 1]);
    }

    #[test]
    fn group_text_round_trip() {
        let gs = GroupSystem::new(4, vec![vec![0, 1], vec![1, 2, 3]]).unwrap();
        let text = gs.to_text();
        assert_eq!(text, "1 2\n2 3 4\n");
        assert_eq!(GroupSystem::parse(&text, None, Path::new("g")).unwrap(), gs);
        assert!(GroupSystem::parse("1 0\n", None, Path::new("g")).is_err());
    }

    #[test]
    fn fused_examples() {
        let b = fused_difference_operator(3).unwrap();
        assert_eq!(b.apply(&[2.0, 2.0, 2.0]).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(b.apply(&[3.0, 1.0, 4.0]).unwrap().as_slice(), &[2.0, -3.0]);
        let g = OuterGram::new(&b).to_dense();
        let bd = b.to_dense();
        let explicit = bd.matmul(&bd.transpose()).unwrap();
        assert_eq!(g, explicit);
        assert_eq!(explicit.row(0), &[2.0, -1.0]);
        assert!(fused_difference_operator(1).is_err());
    }

    #[test]
    fn incidence_examples() {
        let path = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(incidence_operator(&path), fused_difference_operator(3).unwrap());

        let empty = Graph::new(4, vec![]).unwrap();
        let b = incidence_operator(&empty);
        assert_eq!((b.rows(), b.cols()), (0, 4));

        let tri = Graph::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        let b = incidence_operator(&tri);
        assert_eq!(b.apply(&[1.0, 0.0, 0.0]).unwrap().as_slice(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn graph_validation_and_io() {
        assert!(Graph::new(3, vec![(0, 0)]).is_err());
        assert!(Graph::new(3, vec![(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(2, vec![(0, 2)]).is_err());
        let g = Graph::new(3, vec![(2, 0), (1, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2), (1, 2)]);
        let text = g.to_text();
        assert_eq!(Graph::parse(&text, Some(3), Path::new("e")).unwrap(), g);
        assert!(Graph::parse("1 2 3\n", None, Path::new("e")).is_err());
    }

    #[test]
    fn tree_examples() {
        let t = tree_group_system(&[2]).unwrap();
        assert_eq!(t.groups(), &[vec![0, 1, 2], vec![1], vec![2]]);
        let chain = tree_group_system(&[1]).unwrap();
        assert_eq!(chain.groups(), &[vec![0, 1], vec![1]]);

        let big = tree_group_system(&[10, 2, 2]).unwrap();
        assert_eq!(big.dim(), 71);
        assert_eq!(big.len(), 71);
        // subtree sizes per level: root 71, ten of 7, twenty of 3, forty leaves
        let oracle = 71 + 10 * 7 + 20 * 3 + 40;
        assert_eq!(big.total_size(), oracle);
        assert_eq!(big.total_size(), 241);
        assert!(tree_group_system(&[]).is_err());
        assert!(tree_group_system(&[2, 0]).is_err());
    }
}
