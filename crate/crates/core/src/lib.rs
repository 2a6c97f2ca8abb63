//! Bayesian inference for autologistic (Ising) lattice models with exact,
//! pseudo- and conditional composite likelihoods.
//!
//! The exact likelihood is available for lattices whose smaller dimension is
//! at most [`MAX_LAG`](error::MAX_LAG), through a forward recursion over
//! column-major sites ([`recursion`]). Composite likelihoods condition
//! `k × k` blocks on their realized boundary and use the same recursion for
//! each block normalizer ([`likelihoods`]). [`samplers`] provides random-walk
//! Metropolis, the exchange algorithm, Gibbs simulation and exact grid
//! posteriors.

pub mod error;
pub mod lattice;
pub mod likelihoods;
pub mod recursion;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result, MAX_LAG};
pub use lattice::{
    enumerate_blocks, parse_lattice, read_lattice, select_blocks, write_lattice, Block, Dims,
    Lattice, ModelParams, SufficientStats,
};
pub use likelihoods::{
    exact_log_likelihood, full_conditional_prob, log_composite_likelihood, log_posterior,
    log_pseudolikelihood, log_unnormalized, BlockSelection, CompositeLikelihoodSpec, Interval,
    Objective, Posterior, PreparedObjective, PriorSpec,
};
pub use recursion::{
    brute_force_log_partition, exact_sample, exact_sample_with, log_block_normalizer,
    log_partition, RecursionPlan,
};
