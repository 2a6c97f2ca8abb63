//! Exact normalizing constants and exact draws for the autologistic model via
//! a forward recursion over sites.
//!
//! The unnormalized density factorizes over sites in column-major order, and
//! after the first `r` sites (with `r` the number of rows) only the most
//! recent spin of each row interacts with the sites still to come. The
//! recursion therefore carries a table over the `2^r` configurations of that
//! window: bit `b` of a state is the current spin of row `b`, with `+1 → 1`
//! and `−1 → 0`. Adding the site at row `ρ` replaces bit `ρ`, folding in the
//! edge to its left neighbour (the replaced bit) and to the site above it
//! (bit `ρ − 1`). Lattices with more rows than columns are transposed first
//! so the table is as small as possible.
//!
//! Tables are kept in linear space with a running log-scale offset; whenever
//! the accumulated worst-case growth could leave the `f64` range the table is
//! renormalized by its maximum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, MAX_LAG};
use crate::lattice::{Block, Dims, Lattice, ModelParams};

/// Largest lattice (in sites) accepted by [`brute_force_log_partition`].
pub const MAX_ENUMERATION_SITES: usize = 20;

// Rescale once the worst-case log growth since the last rescale exceeds this.
const RESCALE_BUDGET: f64 = 500.0;

/// Which couplings of the site factor `q_i(y_i, y_{i+1}, y_{i+m})` are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteCouplings {
    /// Coupling to the site below (`i + 1`); absent on the last row.
    pub down: bool,
    /// Coupling to the site to the right (`i + m`); absent on the last column.
    pub right: bool,
}

/// Orientation and size of the recursion for a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecursionPlan {
    oriented: Dims,
    transposed: bool,
}

impl RecursionPlan {
    pub fn new(dims: Dims) -> Result<Self> {
        let (oriented, transposed) = if dims.rows > dims.cols {
            (dims.transposed(), true)
        } else {
            (dims, false)
        };
        if oriented.rows > MAX_LAG {
            return Err(Error::UnsupportedSize {
                lag: oriented.rows,
                max: MAX_LAG,
            });
        }
        Ok(RecursionPlan {
            oriented,
            transposed,
        })
    }

    /// The lag `r = min(rows, cols)`.
    pub fn lag(&self) -> usize {
        self.oriented.rows
    }

    pub fn state_count(&self) -> usize {
        1 << self.lag()
    }

    /// Dimensions the recursion runs over (rows ≤ cols).
    pub fn oriented_dims(&self) -> Dims {
        self.oriented
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    /// Factor descriptor for site `i` of the oriented lattice.
    pub fn couplings(&self, i: usize) -> SiteCouplings {
        let (r, c) = self.oriented.coords(i);
        SiteCouplings {
            down: r + 1 < self.oriented.rows,
            right: c + 1 < self.oriented.cols,
        }
    }
}

/// The spins a site factor depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalSpins {
    pub center: i8,
    pub down: Option<i8>,
    pub right: Option<i8>,
}

impl LocalSpins {
    /// Reads the spins of factor `i` from a lattice laid out as `plan` expects.
    pub fn gather(plan: &RecursionPlan, lat: &Lattice, i: usize) -> Self {
        let cp = plan.couplings(i);
        let m = plan.oriented_dims().rows;
        LocalSpins {
            center: lat.get(i),
            down: cp.down.then(|| lat.get(i + 1)),
            right: cp.right.then(|| lat.get(i + m)),
        }
    }
}

/// Log of the site factor `θ0·y_i + θ1·y_i·(y_{i+1} + y_{i+m})`, dropping
/// the couplings the plan marks absent for site `i`.
pub fn factor(theta: ModelParams, plan: &RecursionPlan, i: usize, local: LocalSpins) -> f64 {
    let cp = plan.couplings(i);
    let y = f64::from(local.center);
    let mut nb = 0.0;
    if cp.down {
        debug_assert!(local.down.is_some(), "site {i} needs its lower neighbour");
        nb += f64::from(local.down.unwrap_or(0));
    }
    if cp.right {
        debug_assert!(local.right.is_some(), "site {i} needs its right neighbour");
        nb += f64::from(local.right.unwrap_or(0));
    }
    theta.theta0 * y + theta.theta1 * y * nb
}

/// Per-site transfer coefficients. `new0`/`new1` are the table entries with
/// the site spin at −1/+1; `old0`/`old1` hold the left neighbour at −1/+1.
#[derive(Clone, Copy)]
struct Coeffs {
    a00: f64,
    a01: f64,
    a10: f64,
    a11: f64,
}

#[inline]
fn site_coeffs(field: f64, has_left: bool, up: Option<bool>, ej: f64, emj: f64) -> Coeffs {
    let (mut minus, mut plus) = ((-field).exp(), field.exp());
    match up {
        Some(true) => {
            minus *= emj;
            plus *= ej;
        }
        Some(false) => {
            minus *= ej;
            plus *= emj;
        }
        None => {}
    }
    if has_left {
        Coeffs {
            a00: minus * ej,
            a01: minus * emj,
            a10: plus * emj,
            a11: plus * ej,
        }
    } else {
        Coeffs {
            a00: minus,
            a01: minus,
            a10: plus,
            a11: plus,
        }
    }
}

#[inline]
fn apply(table: &mut [f64], t0: usize, bit: usize, k: Coeffs) {
    let t1 = t0 | bit;
    let (o0, o1) = (table[t0], table[t1]);
    table[t0] = k.a00 * o0 + k.a01 * o1;
    table[t1] = k.a10 * o0 + k.a11 * o1;
}

/// Folds site `(row, col)` into `table`.
fn step(table: &mut [f64], lag: usize, row: usize, col: usize, field: f64, ej: f64, emj: f64) {
    let bit = 1usize << row;
    let has_left = col > 0;
    let highs = 1usize << (lag - row - 1);
    if row == 0 {
        let k = site_coeffs(field, has_left, None, ej, emj);
        for h in 0..highs {
            apply(table, h << 1, bit, k);
        }
        return;
    }
    let half = 1usize << (row - 1);
    let k_down = site_coeffs(field, has_left, Some(false), ej, emj);
    let k_up = site_coeffs(field, has_left, Some(true), ej, emj);
    for h in 0..highs {
        let base = h << (row + 1);
        for low in 0..half {
            apply(table, base | low, bit, k_down);
        }
        for low in half..bit {
            apply(table, base | low, bit, k_up);
        }
    }
}

/// Divides by the maximum entry and returns its log.
fn rescale(table: &mut [f64]) -> f64 {
    let max = table.iter().copied().fold(0.0f64, f64::max);
    if max > 0.0 && max.is_finite() {
        let inv = 1.0 / max;
        table.iter_mut().for_each(|v| *v *= inv);
        max.ln()
    } else {
        0.0
    }
}

#[inline]
fn growth_bound(field: f64, coupling: f64) -> f64 {
    std::f64::consts::LN_2 + field.abs() + 2.0 * coupling.abs()
}

/// Free spins on an oriented grid (rows ≤ [`MAX_LAG`]) with per-site external
/// fields and a uniform nearest-neighbour coupling.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FieldGrid<'a> {
    pub dims: Dims,
    /// Column-major, one field per site.
    pub fields: &'a [f64],
    pub coupling: f64,
}

impl FieldGrid<'_> {
    /// `log Σ_y exp(Σ_i h_i y_i + J Σ_edges y_i y_j)`, using `table` as scratch.
    pub fn log_normalizer(&self, table: &mut Vec<f64>) -> f64 {
        let lag = self.dims.rows;
        debug_assert!(lag <= MAX_LAG && self.fields.len() == self.dims.sites());
        let states = 1usize << lag;
        table.clear();
        table.resize(states, 0.0);
        table[0] = 1.0;
        let (ej, emj) = (self.coupling.exp(), (-self.coupling).exp());
        let mut log_scale = 0.0;
        let mut budget = 0.0;
        for col in 0..self.dims.cols {
            for row in 0..lag {
                let h = self.fields[col * lag + row];
                let g = growth_bound(h, self.coupling);
                if budget + g > RESCALE_BUDGET {
                    log_scale += rescale(table);
                    budget = 0.0;
                }
                step(table, lag, row, col, h, ej, emj);
                budget += g;
            }
        }
        let total: f64 = table.iter().sum();
        log_scale + total.ln()
    }

    /// Draws a configuration exactly from the grid's distribution.
    ///
    /// Forward tables are checkpointed at the start of every column; the
    /// backward pass replays one column at a time and samples the left
    /// neighbour bits from the stored tables, site by site in reverse order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i8> {
        let lag = self.dims.rows;
        let cols = self.dims.cols;
        let states = 1usize << lag;
        let (ej, emj) = (self.coupling.exp(), (-self.coupling).exp());

        let mut checkpoints: Vec<Vec<f64>> = Vec::with_capacity(cols);
        let mut table = vec![0.0; states];
        table[0] = 1.0;
        for col in 0..cols {
            checkpoints.push(table.clone());
            self.replay_column(&mut table, col, ej, emj, None);
        }

        let mut state = sample_index(&table, rng);
        let mut spins = vec![0i8; self.dims.sites()];
        let mut column_tables: Vec<Vec<f64>> = vec![Vec::new(); lag];
        for col in (0..cols).rev() {
            let mut t = checkpoints[col].clone();
            self.replay_column(&mut t, col, ej, emj, Some(&mut column_tables));
            for row in (0..lag).rev() {
                let bit = 1usize << row;
                let y_plus = state & bit != 0;
                spins[col * lag + row] = if y_plus { 1 } else { -1 };
                let left_plus = if col == 0 {
                    false
                } else {
                    let before = &column_tables[row];
                    // Only the left coupling depends on the replaced bit.
                    let (same, diff) = (ej, emj);
                    let w_minus = before[state & !bit] * if y_plus { diff } else { same };
                    let w_plus = before[state | bit] * if y_plus { same } else { diff };
                    rng.random::<f64>() * (w_minus + w_plus) < w_plus
                };
                if left_plus {
                    state |= bit;
                } else {
                    state &= !bit;
                }
            }
        }
        spins
    }

    /// Advances `table` through column `col`, optionally recording the table
    /// in force before each site.
    fn replay_column(
        &self,
        table: &mut [f64],
        col: usize,
        ej: f64,
        emj: f64,
        mut record: Option<&mut Vec<Vec<f64>>>,
    ) {
        let lag = self.dims.rows;
        for row in 0..lag {
            rescale(table);
            if let Some(rec) = record.as_deref_mut() {
                rec[row].clear();
                rec[row].extend_from_slice(table);
            }
            step(table, lag, row, col, self.fields[col * lag + row], ej, emj);
        }
        rescale(table);
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding left u just past the last positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// `log z(θ)` for a `rows × cols` lattice with free boundary.
pub fn log_partition(theta: ModelParams, rows: usize, cols: usize) -> Result<f64> {
    let plan = RecursionPlan::new(Dims::new(rows, cols)?)?;
    Ok(log_partition_planned(theta, &plan))
}

pub(crate) fn log_partition_planned(theta: ModelParams, plan: &RecursionPlan) -> f64 {
    let dims = plan.oriented_dims();
    let fields = vec![theta.theta0; dims.sites()];
    let grid = FieldGrid {
        dims,
        fields: &fields,
        coupling: theta.theta1,
    };
    grid.log_normalizer(&mut Vec::with_capacity(plan.state_count()))
}

/// Boundary-neighbour spin sums for each block site, in block order.
pub(crate) fn block_boundary_sums(lat: &Lattice, block: &Block) -> Vec<i64> {
    let dims = lat.dims();
    block
        .index_set
        .iter()
        .map(|&i| {
            let mut s = 0i64;
            dims.for_each_neighbor(i, |j| {
                if !block.contains(dims, j) {
                    s += i64::from(lat.get(j));
                }
            });
            s
        })
        .collect()
}

/// `log z(θ, y_{−A})`: the normalizer of the block's conditional
/// distribution given the realized spins on its boundary.
pub fn log_block_normalizer(theta: ModelParams, lat: &Lattice, block: &Block) -> Result<f64> {
    if block.size > MAX_LAG {
        return Err(Error::UnsupportedSize {
            lag: block.size,
            max: MAX_LAG,
        });
    }
    if block.top_row + block.size > lat.rows() || block.left_col + block.size > lat.cols() {
        return Err(Error::domain("block does not fit the lattice"));
    }
    let fields: Vec<f64> = block_boundary_sums(lat, block)
        .into_iter()
        .map(|b| theta.theta0 + theta.theta1 * b as f64)
        .collect();
    let grid = FieldGrid {
        dims: Dims {
            rows: block.size,
            cols: block.size,
        },
        fields: &fields,
        coupling: theta.theta1,
    };
    Ok(grid.log_normalizer(&mut Vec::new()))
}

/// An exact draw from the autologistic model, seeded.
pub fn exact_sample(theta: ModelParams, rows: usize, cols: usize, seed: u64) -> Result<Lattice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    exact_sample_with(theta, Dims::new(rows, cols)?, &mut rng)
}

/// An exact draw using the caller's random stream.
pub fn exact_sample_with<R: Rng + ?Sized>(
    theta: ModelParams,
    dims: Dims,
    rng: &mut R,
) -> Result<Lattice> {
    let plan = RecursionPlan::new(dims)?;
    let od = plan.oriented_dims();
    let fields = vec![theta.theta0; od.sites()];
    let grid = FieldGrid {
        dims: od,
        fields: &fields,
        coupling: theta.theta1,
    };
    let spins = grid.sample(rng);
    let lat = Lattice::from_spins(od.rows, od.cols, spins)?;
    Ok(if plan.is_transposed() {
        lat.transposed()
    } else {
        lat
    })
}

/// `log z(θ)` by direct summation over all `2^{rows·cols}` configurations.
pub fn brute_force_log_partition(theta: ModelParams, rows: usize, cols: usize) -> Result<f64> {
    let dims = Dims::new(rows, cols)?;
    let n = dims.sites();
    if n > MAX_ENUMERATION_SITES {
        return Err(Error::TooLargeForEnumeration {
            sites: n,
            max: MAX_ENUMERATION_SITES,
        });
    }
    let mut edges = Vec::with_capacity(dims.edge_count());
    for i in 0..n {
        dims.for_each_neighbor(i, |j| {
            if j > i {
                edges.push((i, j));
            }
        });
    }
    let spin = |cfg: u32, i: usize| if cfg >> i & 1 == 1 { 1.0 } else { -1.0 };
    let exponents: Vec<f64> = (0..1u32 << n)
        .map(|cfg| {
            let s0: f64 = (0..n).map(|i| spin(cfg, i)).sum();
            let s1: f64 = edges.iter().map(|&(i, j)| spin(cfg, i) * spin(cfg, j)).sum();
            theta.theta0 * s0 + theta.theta1 * s1
        })
        .collect();
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|&e| (e - max).exp()).sum();
    Ok(max + sum.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_blocks;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn factor_examples() {
        let plan = RecursionPlan::new(Dims::new(3, 3).unwrap()).unwrap();
        // site 4 is interior
        let v = factor(
            ModelParams::ising(0.4),
            &plan,
            4,
            LocalSpins {
                center: 1,
                down: Some(1),
                right: Some(-1),
            },
        );
        assert_eq!(v, 0.0);
        // site 6 is row 0 of the last column
        let v = factor(
            ModelParams {
                theta0: 0.2,
                theta1: 0.4,
            },
            &plan,
            6,
            LocalSpins {
                center: 1,
                down: Some(1),
                right: None,
            },
        );
        assert!((v - 0.6).abs() < 1e-15);
        assert_eq!(
            plan.couplings(8),
            SiteCouplings {
                down: false,
                right: false
            }
        );
    }

    #[test]
    fn uniform_partition() {
        let v = log_partition(ModelParams::ising(0.0), 3, 3).unwrap();
        assert!((v - 9.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn one_by_two_matches_hand_enumeration() {
        let j: f64 = 0.4;
        let expect = (2.0 * j.exp() + 2.0 * (-j).exp()).ln();
        let v = log_partition(ModelParams::ising(j), 1, 2).unwrap();
        assert!((v - expect).abs() < 1e-14);
        let v = log_partition(ModelParams::ising(j), 2, 1).unwrap();
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn four_by_four_matches_brute_force() {
        let th = ModelParams {
            theta0: 0.3,
            theta1: 0.4,
        };
        let a = log_partition(th, 4, 4).unwrap();
        let b = brute_force_log_partition(th, 4, 4).unwrap();
        assert!(rel(a, b) < 1e-12, "{a} {b}");
    }

    #[test]
    fn lag_cap() {
        assert!(matches!(
            log_partition(ModelParams::ising(0.4), 21, 30),
            Err(Error::UnsupportedSize { lag: 21, max: 20 })
        ));
        // wide but shallow is fine
        assert!(log_partition(ModelParams::ising(0.4), 2, 500).unwrap().is_finite());
        assert!(matches!(
            brute_force_log_partition(ModelParams::ising(0.0), 5, 5),
            Err(Error::TooLargeForEnumeration { .. })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let v = brute_force_log_partition(ModelParams::ising(0.0), 2, 2).unwrap();
        assert!((v - 4.0 * 2f64.ln()).abs() < 1e-14);
        let th = ModelParams {
            theta0: 10.0,
            theta1: 0.0,
        };
        // independent sites: log z = 4·log(e^10 + e^-10)
        let expect = 4.0 * (10.0 + (1.0 + (-20f64).exp()).ln());
        let v = brute_force_log_partition(th, 2, 2).unwrap();
        assert!((v - expect).abs() < 1e-9);
    }

    #[test]
    fn extreme_parameters_stay_finite() {
        for &(t0, t1) in &[(10.0, 10.0), (-10.0, 10.0), (0.0, -10.0), (3.0, -10.0)] {
            let th = ModelParams {
                theta0: t0,
                theta1: t1,
            };
            let v = log_partition(th, 16, 100).unwrap();
            assert!(v.is_finite(), "{t0} {t1}");
            let a = log_partition(th, 3, 4).unwrap();
            let b = brute_force_log_partition(th, 3, 4).unwrap();
            assert!(rel(a, b) < 1e-12);
        }
        // all-aligned ground state dominates: log z ≈ θ1·E + n·θ0 for large θ
        let th = ModelParams {
            theta0: 10.0,
            theta1: 10.0,
        };
        let d = Dims::new(16, 100).unwrap();
        let v = log_partition(th, 16, 100).unwrap();
        let ground = 10.0 * d.edge_count() as f64 + 10.0 * d.sites() as f64;
        assert!(rel(v, ground) < 1e-9);
    }

    #[test]
    fn whole_block_matches_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lat = Lattice::random(4, 4, &mut rng).unwrap();
        let block = enumerate_blocks(lat.dims(), 4).unwrap().remove(0);
        let th = ModelParams {
            theta0: -0.2,
            theta1: 0.7,
        };
        let a = log_block_normalizer(th, &lat, &block).unwrap();
        let b = log_partition(th, 4, 4).unwrap();
        assert!(rel(a, b) < 1e-13);
    }

    #[test]
    fn block_normalizer_at_zero_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let lat = Lattice::random(7, 7, &mut rng).unwrap();
        for block in enumerate_blocks(lat.dims(), 3).unwrap() {
            let v = log_block_normalizer(ModelParams::default(), &lat, &block).unwrap();
            assert!((v - 9.0 * 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn sampler_is_seed_deterministic_and_respects_shape() {
        let th = ModelParams::ising(0.4);
        let a = exact_sample(th, 5, 3, 9).unwrap();
        let b = exact_sample(th, 5, 3, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dims(), Dims { rows: 5, cols: 3 });
        assert!(exact_sample(th, 25, 25, 1).is_err());
    }

    #[test]
    fn strong_field_sampler_aligns() {
        let th = ModelParams {
            theta0: 8.0,
            theta1: 0.0,
        };
        let lat = exact_sample(th, 6, 6, 1).unwrap();
        assert!(lat.spins().iter().all(|&s| s == 1));
        let th = ModelParams {
            theta0: 0.0,
            theta1: 6.0,
        };
        let lat = exact_sample(th, 6, 9, 2).unwrap();
        let s = lat.sufficient_statistics();
        assert_eq!(s.s0.unsigned_abs() as usize, lat.len());
    }
}
