//! Likelihood objectives: exact, pseudolikelihood and (weighted) conditional
//! composite likelihood over square blocks, plus uniform priors.
//!
//! The free functions evaluate an objective once. Samplers evaluate the same
//! objective at many parameter values for a fixed lattice, so
//! [`PreparedObjective`] caches everything that does not depend on `θ`.

use crate::error::{Error, Result, MAX_LAG};
use crate::lattice::{enumerate_blocks, select_blocks, Block, Dims, Lattice, ModelParams};
use crate::recursion::{self, block_boundary_sums, FieldGrid, RecursionPlan};

/// How the blocks of a composite likelihood are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockSelection {
    /// Every `k × k` window.
    Exhaustive,
    /// A seeded uniform subset of `⌈fraction·C⌉` windows.
    RandomFraction { fraction: f64, seed: u64 },
    /// A caller-supplied list.
    Explicit(Vec<Block>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeLikelihoodSpec {
    pub block_size: usize,
    pub selection: BlockSelection,
    /// One positive weight per selected block; `None` means all ones.
    pub weights: Option<Vec<f64>>,
}

impl CompositeLikelihoodSpec {
    pub fn exhaustive(block_size: usize) -> Self {
        CompositeLikelihoodSpec {
            block_size,
            selection: BlockSelection::Exhaustive,
            weights: None,
        }
    }

    pub fn fraction(block_size: usize, fraction: f64, seed: u64) -> Self {
        let selection = if fraction == 1.0 {
            BlockSelection::Exhaustive
        } else {
            BlockSelection::RandomFraction { fraction, seed }
        };
        CompositeLikelihoodSpec {
            block_size,
            selection,
            weights: None,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    /// Materializes the block list and weights for a lattice.
    pub fn resolve(&self, dims: Dims) -> Result<(Vec<Block>, Vec<f64>)> {
        let k = self.block_size;
        if k == 0 {
            return Err(Error::domain("block size must be at least 1"));
        }
        if k > MAX_LAG {
            return Err(Error::UnsupportedSize { lag: k, max: MAX_LAG });
        }
        let blocks = match &self.selection {
            BlockSelection::Exhaustive => enumerate_blocks(dims, k)?,
            BlockSelection::RandomFraction { fraction, seed } => {
                select_blocks(&enumerate_blocks(dims, k)?, *fraction, *seed)?
            }
            BlockSelection::Explicit(blocks) => {
                for b in blocks {
                    if b.size != k {
                        return Err(Error::domain(format!(
                            "block of size {} in a size-{k} composite likelihood",
                            b.size
                        )));
                    }
                    // Rebuild to validate placement against these dimensions.
                    if Block::new(dims, b.top_row, b.left_col, b.size)? != *b {
                        return Err(Error::domain("block does not belong to this lattice"));
                    }
                }
                blocks.clone()
            }
        };
        if blocks.is_empty() {
            return Err(Error::domain("composite likelihood needs at least one block"));
        }
        let weights = match &self.weights {
            None => vec![1.0; blocks.len()],
            Some(w) => {
                if w.len() != blocks.len() {
                    return Err(Error::domain(format!(
                        "{} weights for {} blocks",
                        w.len(),
                        blocks.len()
                    )));
                }
                if let Some(bad) = w.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::domain(format!("block weight {bad} is not positive")));
                }
                w.clone()
            }
        };
        Ok((blocks, weights))
    }
}

/// A closed interval `[lo, hi]`, `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn log_uniform_density(&self) -> f64 {
        -(self.hi - self.lo).ln()
    }
}

/// Independent uniform priors. A parameter with no interval is held fixed
/// and contributes no density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub theta0: Option<Interval>,
    pub theta1: Option<Interval>,
}

impl PriorSpec {
    /// Uniform on `[lo, hi]` for the interaction parameter only.
    pub fn uniform_theta1(lo: f64, hi: f64) -> Result<Self> {
        Ok(PriorSpec {
            theta0: None,
            theta1: Some(Interval::new(lo, hi)?),
        })
    }

    pub fn log_density(&self, theta: ModelParams) -> f64 {
        let mut lp = 0.0;
        for (iv, x) in [(self.theta0, theta.theta0), (self.theta1, theta.theta1)] {
            if let Some(iv) = iv {
                if !iv.contains(x) {
                    return f64::NEG_INFINITY;
                }
                lp += iv.log_uniform_density();
            }
        }
        lp
    }
}

impl Default for PriorSpec {
    /// Uniform `[-10, 10]` on `θ1`.
    fn default() -> Self {
        PriorSpec {
            theta0: None,
            theta1: Some(Interval { lo: -10.0, hi: 10.0 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Exact,
    Pseudo,
    Composite(CompositeLikelihoodSpec),
}

/// `log q(y|θ) = θ0·s0(y) + θ1·s1(y)`.
pub fn log_unnormalized(theta: ModelParams, lat: &Lattice) -> f64 {
    lat.sufficient_statistics().dot(theta)
}

pub fn exact_log_likelihood(theta: ModelParams, lat: &Lattice) -> Result<f64> {
    Ok(log_unnormalized(theta, lat) - recursion::log_partition(theta, lat.rows(), lat.cols())?)
}

/// `log(e^u + e^{−u})` without overflow.
#[inline]
fn log_two_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Log of `p(y_i = spin | neighbours summing to nsum)`.
#[inline]
fn log_site_conditional(theta: ModelParams, spin: f64, nsum: f64) -> f64 {
    let u = theta.theta0 + theta.theta1 * nsum;
    spin * u - log_two_cosh(u)
}

/// Probability of the realized spin at site `i` given its neighbours.
pub fn full_conditional_prob(theta: ModelParams, lat: &Lattice, i: usize) -> Result<f64> {
    if i >= lat.len() {
        return Err(Error::domain(format!("site {i} out of range")));
    }
    let u = theta.theta0 + theta.theta1 * lat.neighbor_sum(i) as f64;
    // exp(y·u) / (e^u + e^−u) = logistic(2·y·u)
    let x = 2.0 * f64::from(lat.get(i)) * u;
    Ok(1.0 / (1.0 + (-x).exp()))
}

pub fn log_pseudolikelihood(theta: ModelParams, lat: &Lattice) -> f64 {
    (0..lat.len())
        .map(|i| log_site_conditional(theta, f64::from(lat.get(i)), lat.neighbor_sum(i) as f64))
        .sum()
}

/// `Σ_i w_i · log p(y_{A_i} | y_{−A_i}, θ)`.
pub fn log_composite_likelihood(
    theta: ModelParams,
    lat: &Lattice,
    spec: &CompositeLikelihoodSpec,
) -> Result<f64> {
    let prepared = PreparedComposite::new(lat, spec)?;
    Ok(prepared.log_likelihood(theta))
}

/// Objective log-likelihood plus log prior; `−∞` outside the prior support.
pub fn log_posterior(
    theta: ModelParams,
    lat: &Lattice,
    objective: &Objective,
    prior: &PriorSpec,
) -> Result<f64> {
    let lp = prior.log_density(theta);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    let ll = match objective {
        Objective::Exact => exact_log_likelihood(theta, lat)?,
        Objective::Pseudo => log_pseudolikelihood(theta, lat),
        Objective::Composite(spec) => log_composite_likelihood(theta, lat, spec)?,
    };
    Ok(ll + lp)
}

/// Fixed-lattice quantities for one conditional block term.
#[derive(Debug, Clone)]
pub struct BlockTerm {
    pub block: Block,
    pub weight: f64,
    /// Spin sum over the block.
    pub s0: i64,
    /// Within-block edges plus block-to-boundary edges, each once.
    pub s1: i64,
    /// Per block site, the sum of its neighbours outside the block.
    boundary_sums: Vec<i64>,
}

impl BlockTerm {
    fn new(lat: &Lattice, block: Block, weight: f64) -> Self {
        let dims = lat.dims();
        let mut s0 = 0i64;
        let mut s1 = 0i64;
        for &i in &block.index_set {
            let yi = i64::from(lat.get(i));
            s0 += yi;
            dims.for_each_neighbor(i, |j| {
                if !block.contains(dims, j) || j > i {
                    s1 += yi * i64::from(lat.get(j));
                }
            });
        }
        let boundary_sums = block_boundary_sums(lat, &block);
        BlockTerm {
            block,
            weight,
            s0,
            s1,
            boundary_sums,
        }
    }

    /// Unweighted `log p(y_A | y_{−A}, θ)`.
    pub fn log_conditional(&self, theta: ModelParams, fields: &mut Vec<f64>, table: &mut Vec<f64>) -> f64 {
        fields.clear();
        fields.extend(
            self.boundary_sums
                .iter()
                .map(|&b| theta.theta0 + theta.theta1 * b as f64),
        );
        let grid = FieldGrid {
            dims: Dims {
                rows: self.block.size,
                cols: self.block.size,
            },
            fields,
            coupling: theta.theta1,
        };
        theta.theta0 * self.s0 as f64 + theta.theta1 * self.s1 as f64 - grid.log_normalizer(table)
    }
}

/// A conditional composite likelihood bound to one lattice.
#[derive(Debug, Clone)]
pub struct PreparedComposite {
    terms: Vec<BlockTerm>,
}

impl PreparedComposite {
    pub fn new(lat: &Lattice, spec: &CompositeLikelihoodSpec) -> Result<Self> {
        let (blocks, weights) = spec.resolve(lat.dims())?;
        let terms = blocks
            .into_iter()
            .zip(weights)
            .map(|(b, w)| BlockTerm::new(lat, b, w))
            .collect();
        Ok(PreparedComposite { terms })
    }

    pub fn terms(&self) -> &[BlockTerm] {
        &self.terms
    }

    /// Sums terms sequentially in block order.
    pub fn log_likelihood(&self, theta: ModelParams) -> f64 {
        let mut fields = Vec::new();
        let mut table = Vec::new();
        self.terms
            .iter()
            .map(|t| t.weight * t.log_conditional(theta, &mut fields, &mut table))
            .sum()
    }
}

/// Pseudolikelihood as counts over the 18 possible (spin, neighbour-sum) pairs.
#[derive(Debug, Clone)]
struct PreparedPseudo {
    // index: (spin + 1) / 2 * 9 + (nsum + 4)
    counts: [u32; 18],
}

impl PreparedPseudo {
    fn new(lat: &Lattice) -> Self {
        let mut counts = [0u32; 18];
        for i in 0..lat.len() {
            let y = usize::from(lat.get(i) > 0);
            let ns = (lat.neighbor_sum(i) + 4) as usize;
            counts[y * 9 + ns] += 1;
        }
        PreparedPseudo { counts }
    }

    fn log_likelihood(&self, theta: ModelParams) -> f64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(idx, &c)| {
                let spin = if idx >= 9 { 1.0 } else { -1.0 };
                let nsum = (idx % 9) as f64 - 4.0;
                f64::from(c) * log_site_conditional(theta, spin, nsum)
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Exact {
        stats: crate::lattice::SufficientStats,
        plan: RecursionPlan,
    },
    Pseudo(PreparedPseudo),
    Composite(PreparedComposite),
}

/// An objective bound to one observed lattice, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PreparedObjective {
    inner: Prepared,
}

impl PreparedObjective {
    pub fn new(lat: &Lattice, objective: &Objective) -> Result<Self> {
        let inner = match objective {
            Objective::Exact => Prepared::Exact {
                stats: lat.sufficient_statistics(),
                plan: RecursionPlan::new(lat.dims())?,
            },
            Objective::Pseudo => Prepared::Pseudo(PreparedPseudo::new(lat)),
            Objective::Composite(spec) => {
                Prepared::Composite(PreparedComposite::new(lat, spec)?)
            }
        };
        Ok(PreparedObjective { inner })
    }

    pub fn log_likelihood(&self, theta: ModelParams) -> f64 {
        match &self.inner {
            Prepared::Exact { stats, plan } => {
                stats.dot(theta) - recursion::log_partition_planned(theta, plan)
            }
            Prepared::Pseudo(p) => p.log_likelihood(theta),
            Prepared::Composite(c) => c.log_likelihood(theta),
        }
    }
}

/// Log posterior kernel `log L(y|θ) + log p(θ)` for a fixed lattice.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub objective: PreparedObjective,
    pub prior: PriorSpec,
}

impl Posterior {
    pub fn new(lat: &Lattice, objective: &Objective, prior: PriorSpec) -> Result<Self> {
        Ok(Posterior {
            objective: PreparedObjective::new(lat, objective)?,
            prior,
        })
    }

    pub fn log_density(&self, theta: ModelParams) -> f64 {
        let lp = self.prior.log_density(theta);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        self.objective.log_likelihood(theta) + lp
    }
}
