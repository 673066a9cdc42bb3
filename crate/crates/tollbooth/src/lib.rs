//! Revenue-maximizing edge pricing for path customers on trees.
//!
//! Given a tree and a set of single-minded customers, each wanting the
//! unique path between two vertices subject to a budget, assign a
//! non-negative price to every edge to maximize the collected revenue.
//! The solver classifies customers by a recursive balanced decomposition
//! of the tree, prices each class independently with a best-of-two of an
//! endpoint scenario and a skeleton segment-guessing scenario, and keeps
//! the best class scheme. An exact brute-force oracle and a seeded
//! experiment harness support verification at small sizes.
//!
//! All arithmetic is exact rational; derandomized runs are byte
//! reproducible, randomized runs are reproducible per seed.

#![forbid(unsafe_code)]

pub mod bench;
pub mod classify;
pub mod decompose;
pub mod error;
pub mod generate;
pub mod io;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod single_source;
pub mod solver;

pub use classify::{choose_k, classify, is_separated, single_edge_pricing, solve_full};
pub use decompose::{
    balanced_k_decomposition, centroid_split, extract_skeleton, trivial_decomposition,
    Decomposition, SkeletonInfo,
};
pub use error::Error;
pub use model::{
    evaluate_revenue, revenue_breakdown, Customer, EdgeId, Instance, PricingScheme,
    RevenueBreakdown, Tree, VertexId,
};
pub use oracle::{brute_force_opt, gamma_round, OracleResult};
pub use rational::Rat;
pub use single_source::{solve_single_source, SingleSourceInstance};
pub use solver::{
    build_gamma_grid, expected_revenue, scenario_one, scenario_two, solve_decomposition,
    AssignmentChoice, GammaGrid, Mode, Scenario, SegmentGuess, Selector, SolverConfig,
    SubInstance,
};
