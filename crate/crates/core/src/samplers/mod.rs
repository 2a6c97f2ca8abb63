//! Data-generating samplers and posterior samplers.

pub mod exchange;
pub mod gibbs;
pub mod grid;
pub mod mcmc;

pub use exchange::{exchange, exchange_log_ratio, exchange_log_ratio_with, InnerSampler};
pub use gibbs::{gibbs_sweep, gibbs_sweep_in_place, simulate_datasets, DataMethod};
pub use grid::{grid_posterior, GridPosterior, GridSpec};
pub use mcmc::{batch_means_se, mean_variance, metropolis, tune_proposal_sd, ChainResult, McmcConfig};
