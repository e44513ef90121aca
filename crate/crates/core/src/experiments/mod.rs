//! Synthetic problem generators and the benchmark driver.

mod bench;
mod generators;

pub use bench::{
    leading_mass, run_benchmark, run_single, signs_match, suite_problem, BenchConfig, BenchReport, RecoveryCheck,
    RunMetrics, RunRecord, Suite, SuiteProblem, SUMMARY_HEADER, TREE_DIM,
};
pub use generators::{
    cluster_labels, gen_cluster_graph, gen_cluster_graph_structure, gen_fused_data, gen_overlap_data,
    gen_overlap_groups, gen_tree_data, rng_for, FusedExperimentSpec, FusedInstance, GraphExperimentSpec, GraphInstance,
    OverlapExperimentSpec, OverlapGroups, OverlapInstance, TreeExperimentSpec, TreeInstance,
};
