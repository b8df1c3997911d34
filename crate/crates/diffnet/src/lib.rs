//! Optimal allocation of a sampling budget across individual and
//! pairwise-difference measurements.
//!
//! Given `m` quantities that can be measured individually and via pairwise
//! differences — each measurement with a known per-sample fluctuation —
//! this crate allocates a fixed sampling budget across the measurements so
//! as to minimize the trace (A-optimal), log-determinant (D-optimal) or
//! largest eigenvalue (E-optimal) of the covariance of the
//! maximum-likelihood estimates. The A and D problems are solved by
//! projected gradient descent on the budget simplex with a first-order
//! optimality certificate; the E problem is solved exactly, by a
//! shortest-path-tree construction. Re-allocation on top of already-spent
//! samples, sparse k-edge-connected designs, closed-form designs for the
//! constant-relative-error regime, simulated iterative campaigns and a
//! seeded benchmark harness are included.
//!
//! The examples directory walks through each capability; `cargo run --bin
//! diffnet -- help` lists the command-line interface.

pub mod bench;
pub mod campaign;
pub mod designs;
pub mod error;
pub mod inference;
pub mod io;
pub mod network;
pub mod solver;
pub mod tree;

pub use bench::{
    connectivity_stats, run_random_benchmark, BenchmarkSpec, ConnectivityStats, SModel, StatsTable,
};
pub use campaign::{
    kl_divergence, kl_divergence_floored, run_campaign, simulate_measurements, CampaignState,
    IterationRecord, Truth,
};
pub use designs::{
    const_rel_error_a_optimal, const_rel_error_d_optimal, naive_allocation, sparse_design,
    ChainDesign, NaiveScheme, SparseDesignSpec, SparseReport,
};
pub use error::{Error, Result};
pub use inference::{
    covariance, estimate, fisher_matrix, gradient, objective, Estimate, InformationState,
    Objective,
};
pub use network::{
    build_network, complete_network, connectivity_deficit, contract_references, cost_transform,
    minimum_spanning_tree, total_cost, Allocation, CostTransform, DifferenceNetwork, EdgeId,
    Measurement, MeasurementSet, ReferenceContraction,
};
pub use solver::{kkt_residual, optimize, optimize_restricted, round_to_integers, SolveReport};
pub use tree::{e_optimal, shortest_path_tree, tree_covariance, ShortestPathTree};
