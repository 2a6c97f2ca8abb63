use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Random-walk Metropolis settings. `iterations` includes the burn-in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub proposal_sd: f64,
    pub seed: u64,
    pub thin: usize,
}

impl McmcConfig {
    pub fn new(iterations: usize, burn_in: usize, proposal_sd: f64, seed: u64) -> Result<Self> {
        let cfg = McmcConfig {
            iterations,
            burn_in,
            proposal_sd,
            seed,
            thin: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::domain("iterations must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::domain(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.proposal_sd > 0.0 && self.proposal_sd.is_finite()) {
            return Err(Error::domain("proposal sd must be positive"));
        }
        if self.thin == 0 {
            return Err(Error::domain("thinning interval must be positive"));
        }
        Ok(())
    }
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 5000,
            burn_in: 1000,
            proposal_sd: 0.05,
            seed: 0,
            thin: 1,
        }
    }
}

/// Post burn-in draws of `θ1` and their summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    pub samples: Vec<f64>,
    pub acceptance_rate: f64,
    pub posterior_mean: f64,
    pub posterior_variance: f64,
    /// Batch-means estimate of the Monte Carlo standard error of the mean.
    pub mc_standard_error: f64,
    pub wall_time_per_iteration: f64,
}

impl ChainResult {
    pub fn from_samples(samples: Vec<f64>, acceptance_rate: f64, seconds_per_iter: f64) -> Self {
        let (mean, var) = mean_variance(&samples);
        let mc_standard_error = batch_means_se(&samples);
        ChainResult {
            samples,
            acceptance_rate,
            posterior_mean: mean,
            posterior_variance: var,
            mc_standard_error,
            wall_time_per_iteration: seconds_per_iter,
        }
    }
}

/// Sample mean and unbiased variance (zero for fewer than two values).
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1) as f64)
}

/// Standard error of the mean from `⌊√n⌋` non-overlapping batches.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return f64::NAN;
    }
    let size = n / batches;
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let (_, var) = mean_variance(&means);
    (var / batches as f64).sqrt()
}

/// Gaussian random-walk Metropolis on a scalar parameter.
pub fn metropolis<F>(mut log_target: F, init: f64, cfg: &McmcConfig) -> Result<ChainResult>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let mut current_lp = log_target(init);
    if !current_lp.is_finite() {
        return Err(Error::Initialization(format!(
            "log target is {current_lp} at the initial value {init}"
        )));
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let step = Normal::new(0.0, cfg.proposal_sd).map_err(|e| Error::domain(e.to_string()))?;
    let mut current = init;
    let mut accepted = 0usize;
    let mut samples = Vec::with_capacity((cfg.iterations - cfg.burn_in) / cfg.thin + 1);
    let start = Instant::now();
    for it in 0..cfg.iterations {
        let proposal = current + step.sample(&mut rng);
        let lp = log_target(proposal);
        let log_u: f64 = rng.random::<f64>().ln();
        // NaN compares false and is rejected.
        if log_u < lp - current_lp {
            current = proposal;
            current_lp = lp;
            accepted += 1;
        }
        if it >= cfg.burn_in && (it - cfg.burn_in).is_multiple_of(cfg.thin) {
            samples.push(current);
        }
    }
    let per_iter = start.elapsed().as_secs_f64() / cfg.iterations as f64;
    Ok(ChainResult::from_samples(
        samples,
        accepted as f64 / cfg.iterations as f64,
        per_iter,
    ))
}

/// Pilot tuning of the proposal sd towards an acceptance rate in
/// `[0.2, 0.5]`. Returns the tuned sd and the chain's final position.
pub fn tune_proposal_sd<F>(
    mut log_target: F,
    init: f64,
    initial_sd: f64,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    const ROUND: usize = 200;
    const MAX_ROUNDS: u64 = 30;
    let mut sd = initial_sd;
    let mut position = init;
    for round in 0..MAX_ROUNDS {
        let cfg = McmcConfig {
            iterations: ROUND,
            burn_in: 0,
            proposal_sd: sd,
            seed: seed ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15),
            thin: 1,
        };
        let chain = metropolis(&mut log_target, position, &cfg)?;
        position = *chain.samples.last().unwrap_or(&position);
        let acc = chain.acceptance_rate;
        if (0.2..=0.5).contains(&acc) {
            break;
        }
        // Rough inverse relationship between sd and acceptance near the target.
        let factor = if acc < 0.2 {
            (acc / 0.35).max(0.25)
        } else {
            (acc / 0.35).min(4.0)
        };
        sd *= factor;
    }
    Ok((sd, position))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(McmcConfig::new(10, 10, 0.1, 0).is_err());
        assert!(McmcConfig::new(0, 0, 0.1, 0).is_err());
        assert!(McmcConfig::new(10, 2, 0.0, 0).is_err());
        assert!(McmcConfig::new(10, 2, 0.1, 0).is_ok());
    }

    #[test]
    fn standard_normal_target() {
        let cfg = McmcConfig::new(100_000, 1000, 2.4, 42).unwrap();
        let chain = metropolis(|x| -0.5 * x * x, 0.0, &cfg).unwrap();
        assert!(chain.posterior_mean.abs() < 3.0 * chain.mc_standard_error);
        assert!((chain.posterior_variance - 1.0).abs() < 0.1);
        assert!((0.0..=1.0).contains(&chain.acceptance_rate));
        assert_eq!(chain.samples.len(), 99_000);
    }

    #[test]
    fn infinite_start_is_rejected() {
        let cfg = McmcConfig::new(10, 1, 0.1, 0).unwrap();
        let r = metropolis(|x| if x > 0.0 { 0.0 } else { f64::NEG_INFINITY }, -1.0, &cfg);
        assert!(matches!(r, Err(Error::Initialization(_))));
    }

    #[test]
    fn reproducible_and_thinned() {
        let mut cfg = McmcConfig::new(1000, 100, 0.5, 7).unwrap();
        cfg.thin = 3;
        let a = metropolis(|x| -x.abs(), 0.0, &cfg).unwrap();
        let b = metropolis(|x| -x.abs(), 0.0, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.samples.len(), 300);
    }

    #[test]
    fn tuning_reaches_target_band() {
        // narrow target: sd 0.01
        let target = |x: f64| -0.5 * (x / 0.01).powi(2);
        let (sd, _) = tune_proposal_sd(target, 0.0, 1.0, 3).unwrap();
        let cfg = McmcConfig::new(20_000, 0, sd, 4).unwrap();
        let acc = metropolis(target, 0.0, &cfg).unwrap().acceptance_rate;
        assert!((0.15..=0.55).contains(&acc), "sd {sd} acc {acc}");
    }

    #[test]
    fn moments() {
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(mean_variance(&[2.0]), (2.0, 0.0));
    }
}
