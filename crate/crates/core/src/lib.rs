//! Directed preferential attachment graphs, their PageRank, and the
//! branching-process and Pólya-urn descriptions of their local limit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ctbp;
pub mod error;
pub mod graph;
pub mod martingale;
pub mod pagerank;
pub mod polya;
pub mod replica;
pub mod rng;
pub mod tailstats;

pub use ctbp::{
    depth_counts, limit_pair, sample_limit_pair, sample_limit_tree, simulate_ctbp,
    simulate_to_population, simulate_yule, CtbpTree, DepthCounts, LimitPair, Truncation,
};
pub use error::{Error, Result};
pub use graph::{generate, DpaGraph, DpaGrowth, DpaParams};
pub use martingale::{
    coordinate_martingale, exptail_identity_check, martingale_suite, moment_bound_d,
    moment_bound_h, mstar, phistar, pstar, MartingaleParams,
};
pub use pagerank::{
    exact_pagerank, path_counts, power_iteration_pagerank, stationary_pagerank_with_dangling,
    truncated_pagerank, PageRankVector, PathCountTable,
};
pub use polya::{
    birth_time_map, coupled_limit_pair_polya, sample_limit_pair_polya, sample_polya_point_graph,
    yule_arrivals_from_gamma_poisson, PolyaParams, PolyaTree,
};
pub use replica::{replicate, try_replicate};
pub use rng::RngState;
pub use tailstats::{
    ccdf_regression, dcm_fixed_point_sample, hill_estimator, joint_tail_compare, ks_one_sample,
    ks_two_sample, root_growth_experiment, theoretical_exponents, TailFit, TheoreticalExponents,
};
