//! Independent enumeration oracles shared by the integration tests.
#![allow(dead_code)]

use ccl_core::{Lattice, ModelParams};

/// Edges of a `rows × cols` first-order lattice, column-major indices,
/// built from coordinates rather than the library's neighbour code.
pub fn edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for c in 0..cols {
        for r in 0..rows {
            let i = c * rows + r;
            if r + 1 < rows {
                e.push((i, i + 1));
            }
            if c + 1 < cols {
                e.push((i, i + rows));
            }
        }
    }
    e
}

/// All `2^n` spin vectors of length `n`, config bit `i` → spin of site `i`.
pub fn configs(n: usize) -> impl Iterator<Item = Vec<i8>> {
    (0u64..1 << n).map(move |cfg| (0..n).map(|i| if cfg >> i & 1 == 1 { 1 } else { -1 }).collect())
}

pub fn stats(spins: &[i8], edges: &[(usize, usize)]) -> (i64, i64) {
    let s0 = spins.iter().map(|&s| i64::from(s)).sum();
    let s1 = edges
        .iter()
        .map(|&(i, j)| i64::from(spins[i]) * i64::from(spins[j]))
        .sum();
    (s0, s1)
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log z by enumeration.
pub fn enum_log_z(theta: ModelParams, rows: usize, cols: usize) -> f64 {
    let e = edges(rows, cols);
    let ex: Vec<f64> = configs(rows * cols)
        .map(|s| {
            let (s0, s1) = stats(&s, &e);
            theta.theta0 * s0 as f64 + theta.theta1 * s1 as f64
        })
        .collect();
    log_sum_exp(&ex)
}

/// Exact probabilities of every configuration, indexed like `configs`.
pub fn enum_probs(theta: ModelParams, rows: usize, cols: usize) -> Vec<f64> {
    let e = edges(rows, cols);
    let ex: Vec<f64> = configs(rows * cols)
        .map(|s| {
            let (s0, s1) = stats(&s, &e);
            theta.theta0 * s0 as f64 + theta.theta1 * s1 as f64
        })
        .collect();
    let lz = log_sum_exp(&ex);
    ex.iter().map(|x| (x - lz).exp()).collect()
}

/// E[s1] by enumeration.
pub fn enum_mean_s1(theta: ModelParams, rows: usize, cols: usize) -> f64 {
    let e = edges(rows, cols);
    let p = enum_probs(theta, rows, cols);
    configs(rows * cols)
        .zip(&p)
        .map(|(s, &pr)| stats(&s, &e).1 as f64 * pr)
        .sum()
}

pub fn config_index(lat: &Lattice) -> usize {
    lat.spins()
        .iter()
        .enumerate()
        .map(|(i, &s)| usize::from(s > 0) << i)
        .sum()
}

/// Block-conditional log normalizer by enumerating the block's `2^{k²}`
/// configurations with everything else held at `lat`.
pub fn enum_block_log_z(theta: ModelParams, lat: &Lattice, top: usize, left: usize, k: usize) -> f64 {
    let (rows, cols) = (lat.rows(), lat.cols());
    let inside = |i: usize| {
        let (r, c) = (i % rows, i / rows);
        r >= top && r < top + k && c >= left && c < left + k
    };
    let block: Vec<usize> = (0..rows * cols).filter(|&i| inside(i)).collect();
    let rel_edges: Vec<(usize, usize)> = edges(rows, cols)
        .into_iter()
        .filter(|&(i, j)| inside(i) || inside(j))
        .collect();
    let mut spins = lat.spins().to_vec();
    let ex: Vec<f64> = configs(block.len())
        .map(|cfg| {
            for (&site, &s) in block.iter().zip(&cfg) {
                spins[site] = s;
            }
            let s0: i64 = block.iter().map(|&i| i64::from(spins[i])).sum();
            let s1: i64 = rel_edges
                .iter()
                .map(|&(i, j)| i64::from(spins[i]) * i64::from(spins[j]))
                .sum();
            theta.theta0 * s0 as f64 + theta.theta1 * s1 as f64
        })
        .collect();
    log_sum_exp(&ex)
}

/// Block-conditional log probability of the realized block spins.
pub fn enum_block_log_prob(theta: ModelParams, lat: &Lattice, top: usize, left: usize, k: usize) -> f64 {
    let (rows, cols) = (lat.rows(), lat.cols());
    let inside = |i: usize| {
        let (r, c) = (i % rows, i / rows);
        r >= top && r < top + k && c >= left && c < left + k
    };
    let s = lat.spins();
    let s0: i64 = (0..rows * cols).filter(|&i| inside(i)).map(|i| i64::from(s[i])).sum();
    let s1: i64 = edges(rows, cols)
        .into_iter()
        .filter(|&(i, j)| inside(i) || inside(j))
        .map(|(i, j)| i64::from(s[i]) * i64::from(s[j]))
        .sum();
    theta.theta0 * s0 as f64 + theta.theta1 * s1 as f64 - enum_block_log_z(theta, lat, top, left, k)
}

/// Chi-square statistic and degrees of freedom for observed counts against
/// expected probabilities, pooling cells with expected count below 5.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let n: u64 = counts.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e < 5.0 {
            po += c as f64;
            pe += e;
        } else {
            cells.push((c as f64, e));
        }
    }
    if pe > 0.0 {
        cells.push((po, pe));
    }
    let stat = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, cells.len() - 1)
}
