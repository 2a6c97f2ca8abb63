//! Exact posterior of `θ1` (with `θ0 = 0`) on a one-dimensional grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, ModelParams};
use crate::likelihoods::{Objective, PreparedObjective, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: 0.0,
            hi: 1.0,
            step: 0.005,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::domain(format!(
                "invalid grid [{}, {}] step {}",
                self.lo, self.hi, self.step
            )));
        }
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        Ok((0..=n).map(|i| self.lo + i as f64 * self.step).collect())
    }
}

/// Trapezoid weights for a strictly increasing grid.
fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

fn log_sum_exp_weighted(values: &[f64], weights: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = values
        .iter()
        .zip(weights)
        .map(|(&v, &w)| w * (v - max).exp())
        .sum();
    max + s.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    pub grid: Vec<f64>,
    /// `log q(y|θ_i) − log z(θ_i) + log p(θ_i)` per grid point.
    pub log_unnormalized: Vec<f64>,
    /// Log of the trapezoid integral of the kernel: the evidence `log p(y)`.
    pub log_evidence: f64,
    pub normalized_density: Vec<f64>,
}

impl GridPosterior {
    /// Builds the posterior from kernel values on a strictly increasing grid.
    pub fn from_kernel(grid: Vec<f64>, log_unnormalized: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != log_unnormalized.len() {
            return Err(Error::domain("grid needs at least two points and one value per point"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("grid must be strictly increasing"));
        }
        let w = trapezoid_weights(&grid);
        let log_evidence = log_sum_exp_weighted(&log_unnormalized, &w);
        if !log_evidence.is_finite() {
            return Err(Error::domain("posterior kernel vanishes on the whole grid"));
        }
        let normalized_density = log_unnormalized
            .iter()
            .map(|&l| (l - log_evidence).exp())
            .collect();
        Ok(GridPosterior {
            grid,
            log_unnormalized,
            log_evidence,
            normalized_density,
        })
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        trapezoid_weights(&self.grid)
            .iter()
            .zip(&self.grid)
            .zip(&self.normalized_density)
            .map(|((w, &x), d)| w * f(x) * d)
            .sum()
    }

    /// Trapezoid integral of the normalized density (1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.integrate(|x| (x - m).powi(2))
    }

    /// Grid point with the largest kernel value.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .log_unnormalized
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        self.grid[i]
    }
}

/// Exact grid posterior for the Ising interaction parameter.
pub fn grid_posterior(lat: &Lattice, prior: &PriorSpec, spec: &GridSpec) -> Result<GridPosterior> {
    let exact = PreparedObjective::new(lat, &Objective::Exact)?;
    let grid = spec.points()?;
    let kernel: Vec<f64> = grid
        .par_iter()
        .map(|&t| {
            let th = ModelParams::ising(t);
            let lp = prior.log_density(th);
            if lp == f64::NEG_INFINITY {
                lp
            } else {
                exact.log_likelihood(th) + lp
            }
        })
        .collect();
    GridPosterior::from_kernel(grid, kernel)
}
