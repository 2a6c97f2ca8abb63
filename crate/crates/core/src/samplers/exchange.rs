//! Exchange algorithm for the interaction parameter.
//!
//! Each iteration proposes `θ'`, draws an auxiliary lattice `y'` from the
//! model at `θ'`, and accepts with the ratio
//! `q(y|θ') p(θ') q(y'|θ) / (q(y|θ) p(θ) q(y'|θ'))`, in which both
//! normalizing constants cancel.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, ModelParams};
use crate::likelihoods::{log_unnormalized, PriorSpec};
use crate::recursion::{exact_sample_with, RecursionPlan};
use crate::rng::stream_rng;
use crate::samplers::gibbs::gibbs_sweep_in_place;
use crate::samplers::mcmc::{ChainResult, McmcConfig};

/// Sampler used for the auxiliary draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSampler {
    Exact,
    /// Gibbs sweeps started from the observed lattice; approximate.
    Gibbs { sweeps: usize },
}

/// Log acceptance ratio for a move `current → proposal` given the observed
/// lattice and an auxiliary draw at the proposal, for any unnormalized log
/// density `log_q`.
pub fn exchange_log_ratio_with<Q>(
    log_q: Q,
    current: ModelParams,
    proposal: ModelParams,
    data: &Lattice,
    aux: &Lattice,
    prior: &PriorSpec,
) -> f64
where
    Q: Fn(ModelParams, &Lattice) -> f64,
{
    let lp_new = prior.log_density(proposal);
    if lp_new == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    log_q(proposal, data) + log_q(current, aux) - log_q(current, data) - log_q(proposal, aux)
        + lp_new
        - prior.log_density(current)
}

/// [`exchange_log_ratio_with`] for the autologistic model, which reduces to
/// `(θ' − θ)·(s(y) − s(y')) + log p(θ') − log p(θ)`.
pub fn exchange_log_ratio(
    current: ModelParams,
    proposal: ModelParams,
    data: &Lattice,
    aux: &Lattice,
    prior: &PriorSpec,
) -> f64 {
    exchange_log_ratio_with(log_unnormalized, current, proposal, data, aux, prior)
}

/// Exchange-algorithm chain on `θ1` with `θ0` held at zero.
pub fn exchange(
    lat: &Lattice,
    prior: &PriorSpec,
    cfg: &McmcConfig,
    inner: InnerSampler,
    init: f64,
) -> Result<ChainResult> {
    cfg.validate()?;
    if inner == InnerSampler::Exact {
        RecursionPlan::new(lat.dims())?;
    }
    let mut current = ModelParams::ising(init);
    if prior.log_density(current) == f64::NEG_INFINITY {
        return Err(Error::Initialization(format!(
            "initial value {init} is outside the prior support"
        )));
    }
    let data_stats = lat.sufficient_statistics();
    let mut rng = stream_rng(cfg.seed, 0);
    let step = Normal::new(0.0, cfg.proposal_sd).map_err(|e| Error::domain(e.to_string()))?;
    let mut aux = lat.clone();
    let mut accepted = 0usize;
    let mut samples = Vec::with_capacity((cfg.iterations - cfg.burn_in) / cfg.thin + 1);
    let start = Instant::now();
    for it in 0..cfg.iterations {
        let proposal = ModelParams::ising(current.theta1 + step.sample(&mut rng));
        let lp_new = prior.log_density(proposal);
        if lp_new > f64::NEG_INFINITY {
            match inner {
                InnerSampler::Exact => aux = exact_sample_with(proposal, lat.dims(), &mut rng)?,
                InnerSampler::Gibbs { sweeps } => {
                    aux.clone_from(lat);
                    for _ in 0..sweeps {
                        gibbs_sweep_in_place(proposal, &mut aux, &mut rng);
                    }
                }
            }
            let aux_stats = aux.sufficient_statistics();
            let log_ratio = (proposal.theta1 - current.theta1)
                * (data_stats.s1 - aux_stats.s1) as f64
                + lp_new
                - prior.log_density(current);
            if rng.random::<f64>().ln() < log_ratio {
                current = proposal;
                accepted += 1;
            }
        }
        if it >= cfg.burn_in && (it - cfg.burn_in).is_multiple_of(cfg.thin) {
            samples.push(current.theta1);
        }
    }
    let per_iter = start.elapsed().as_secs_f64() / cfg.iterations as f64;
    Ok(ChainResult::from_samples(
        samples,
        accepted as f64 / cfg.iterations as f64,
        per_iter,
    ))
}
