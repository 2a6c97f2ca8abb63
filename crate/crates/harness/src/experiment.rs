//! The `simulate`, `fit`, `report` and `benchmark` commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ccl_core::likelihoods::{CompositeLikelihoodSpec, Objective, Posterior, PriorSpec};
use ccl_core::rng::{derive_seed, stream_rng};
use ccl_core::samplers::{
    exchange, grid_posterior, metropolis, simulate_datasets, tune_proposal_sd, DataMethod,
    InnerSampler, McmcConfig,
};
use ccl_core::{read_lattice, write_lattice, Dims, Lattice, ModelParams, RecursionPlan, MAX_LAG};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::config::{EstimatorSpec, ExperimentConfig, MethodChoice};
use crate::error::{HarnessError, Result};
use crate::tables::{
    dataset_file_name, five_number, read_summary, write_boxplot, write_chain_trace,
    write_grid_trace, write_summary, write_timing, write_variance_table, BoxplotRow, Manifest,
    SummaryRow, TimingRow, MANIFEST_FILE,
};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const VARIANCE_TABLE_FILE: &str = "variance_table.csv";
pub const BOXPLOT_FILE: &str = "bias_boxplot.csv";
pub const TIMING_FILE: &str = "timing.csv";

// Seed path tags keep the streams of different tasks apart.
const TAG_FIT: u64 = 1;
const TAG_BLOCKS: u64 = 2;
const TAG_TUNE: u64 = 3;
const TAG_BENCH: u64 = 4;

fn label_key(label: &str) -> u64 {
    // FNV-1a
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)
        .map_err(|e| HarnessError::io(format!("creating output directory {}", path.display()), e))
}

fn resolve_method(cfg: &ExperimentConfig) -> Result<DataMethod> {
    Ok(match cfg.method {
        MethodChoice::Exact => DataMethod::Exact,
        MethodChoice::Gibbs => DataMethod::Gibbs { sweeps: cfg.sweeps },
        MethodChoice::Auto if cfg.lag() <= MAX_LAG => DataMethod::Exact,
        MethodChoice::Auto => DataMethod::Gibbs { sweeps: cfg.sweeps },
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::config(format!("cannot start worker pool: {e}")))
}

/// Simulates the datasets and writes them with a manifest.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Manifest> {
    let method = resolve_method(cfg)?;
    if method == DataMethod::Exact && cfg.lag() > MAX_LAG {
        return Err(HarnessError::UnsupportedSize(format!(
            "exact simulation of a {}x{} lattice needs lag {} > {MAX_LAG}; use method = gibbs",
            cfg.rows,
            cfg.cols,
            cfg.lag()
        )));
    }
    create_dir(&cfg.out)?;
    let theta = ModelParams::ising(cfg.theta1);
    let lattices = pool(cfg.workers)?.install(|| {
        simulate_datasets(theta, cfg.rows, cfg.cols, cfg.datasets, method, cfg.seed)
    })?;
    for (i, lat) in lattices.iter().enumerate() {
        let path = cfg.out.join(dataset_file_name(i + 1));
        write_lattice(lat, &path).map_err(|e| match e {
            ccl_core::Error::Io(io) => HarnessError::io(format!("writing {}", path.display()), io),
            other => other.into(),
        })?;
    }
    let manifest = Manifest {
        theta0: 0.0,
        theta1: cfg.theta1,
        rows: cfg.rows,
        cols: cfg.cols,
        datasets: cfg.datasets,
        method: match method {
            DataMethod::Exact => "exact".into(),
            DataMethod::Gibbs { .. } => "gibbs".into(),
        },
        sweeps: match method {
            DataMethod::Gibbs { sweeps } => Some(sweeps),
            DataMethod::Exact => None,
        },
        seed: cfg.seed,
    };
    let mpath = cfg.out.join(MANIFEST_FILE);
    fs::write(&mpath, manifest.to_text())
        .map_err(|e| HarnessError::io(format!("writing {}", mpath.display()), e))?;
    Ok(manifest)
}

/// Reads the manifest and every dataset it lists.
pub fn load_datasets(dir: &Path) -> Result<(Manifest, Vec<Lattice>)> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| {
        HarnessError::data(format!("missing dataset manifest {}: {e}", mpath.display()))
    })?;
    let manifest = Manifest::parse(&text, &mpath.display().to_string())?;
    let mut out = Vec::with_capacity(manifest.datasets);
    for id in 1..=manifest.datasets {
        let path = dir.join(dataset_file_name(id));
        let lat = read_lattice(&path).map_err(|e| match e {
            ccl_core::Error::Io(io) => {
                HarnessError::data(format!("missing dataset {}: {io}", path.display()))
            }
            ccl_core::Error::Parse { line, message } => HarnessError::Parse {
                file: path.display().to_string(),
                line,
                message,
            },
            other => other.into(),
        })?;
        if (lat.rows(), lat.cols()) != (manifest.rows, manifest.cols) {
            return Err(HarnessError::data(format!(
                "{} is {}x{} but the manifest says {}x{}",
                path.display(),
                lat.rows(),
                lat.cols(),
                manifest.rows,
                manifest.cols
            )));
        }
        out.push(lat);
    }
    Ok((manifest, out))
}

fn check_compatible(est: &EstimatorSpec, dims: Dims) -> Result<()> {
    match est {
        EstimatorSpec::Ccl { k, .. } if *k > dims.lag() => Err(HarnessError::config(format!(
            "ccl{k} needs blocks larger than the {}x{} lattice",
            dims.rows, dims.cols
        ))),
        EstimatorSpec::Exact if dims.lag() > MAX_LAG => Err(HarnessError::UnsupportedSize(format!(
            "exact posterior of a {}x{} lattice needs lag {} > {MAX_LAG}",
            dims.rows,
            dims.cols,
            dims.lag()
        ))),
        _ => Ok(()),
    }
}

fn objective_for(est: &EstimatorSpec, seed: u64) -> Option<Objective> {
    match *est {
        EstimatorSpec::Pseudo => Some(Objective::Pseudo),
        EstimatorSpec::Ccl { k, fraction } => Some(Objective::Composite(
            CompositeLikelihoodSpec::fraction(k, fraction, seed),
        )),
        EstimatorSpec::Exact | EstimatorSpec::Exchange => None,
    }
}

/// Starting value: the best point of a coarse scan over `[-1, 2]`.
fn coarse_mode(target: impl Fn(f64) -> f64) -> f64 {
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=150 {
        let t = -1.0 + 0.02 * i as f64;
        let v = target(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    best.0
}

/// What a single fit cell produces besides its summary row.
#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Chain(Vec<f64>),
    Grid { grid: Vec<f64>, density: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub row: SummaryRow,
    pub trace: Trace,
}

/// Fits one estimator to one dataset.
pub fn fit_cell(
    cfg: &ExperimentConfig,
    est: &EstimatorSpec,
    lat: &Lattice,
    dataset: usize,
    truth: f64,
) -> Result<CellResult> {
    let label = est.label();
    let key = label_key(&label);
    let seed = derive_seed(cfg.seed, &[TAG_FIT, key, dataset as u64]);
    let prior = PriorSpec::default();
    let timing = |t: f64| if cfg.timing { t } else { 0.0 };
    match est {
        EstimatorSpec::Exact => {
            let start = Instant::now();
            let post = grid_posterior(lat, &prior, &cfg.grid)?;
            let per_point = start.elapsed().as_secs_f64() / post.grid.len() as f64;
            let row = SummaryRow::new(
                label,
                dataset,
                post.mean(),
                truth,
                post.variance(),
                1.0,
                timing(per_point),
            );
            Ok(CellResult {
                row,
                trace: Trace::Grid {
                    grid: post.grid,
                    density: post.normalized_density,
                },
            })
        }
        EstimatorSpec::Exchange => {
            let inner = if lat.dims().lag() <= MAX_LAG {
                InnerSampler::Exact
            } else {
                InnerSampler::Gibbs {
                    sweeps: cfg.exchange_sweeps,
                }
            };
            let pl = Posterior::new(lat, &Objective::Pseudo, prior)?;
            let init = coarse_mode(|t| pl.log_density(ModelParams::ising(t)));
            let mc = McmcConfig {
                iterations: cfg.exchange_iters,
                burn_in: cfg.exchange_burnin,
                proposal_sd: cfg.proposal_sd,
                seed,
                thin: cfg.thin,
            };
            let chain = exchange(lat, &prior, &mc, inner, init)?;
            let row = SummaryRow::new(
                label,
                dataset,
                chain.posterior_mean,
                truth,
                chain.posterior_variance,
                chain.acceptance_rate,
                timing(chain.wall_time_per_iteration),
            );
            Ok(CellResult {
                row,
                trace: Trace::Chain(chain.samples),
            })
        }
        EstimatorSpec::Pseudo | EstimatorSpec::Ccl { .. } => {
            let block_seed = derive_seed(cfg.seed, &[TAG_BLOCKS, key, dataset as u64]);
            let objective = objective_for(est, block_seed).expect("likelihood-based estimator");
            let posterior = Posterior::new(lat, &objective, prior)?;
            let target = |t: f64| posterior.log_density(ModelParams::ising(t));
            let mut init = coarse_mode(target);
            let mut sd = cfg.proposal_sd;
            if cfg.tune {
                let tune_seed = derive_seed(cfg.seed, &[TAG_TUNE, key, dataset as u64]);
                (sd, init) = tune_proposal_sd(target, init, sd, tune_seed)?;
            }
            let mc = McmcConfig {
                iterations: cfg.iterations,
                burn_in: cfg.burn_in,
                proposal_sd: sd,
                seed,
                thin: cfg.thin,
            };
            let chain = metropolis(target, init, &mc)?;
            let row = SummaryRow::new(
                label,
                dataset,
                chain.posterior_mean,
                truth,
                chain.posterior_variance,
                chain.acceptance_rate,
                timing(chain.wall_time_per_iteration),
            );
            Ok(CellResult {
                row,
                trace: Trace::Chain(chain.samples),
            })
        }
    }
}

/// Output of `fit`.
#[derive(Debug, Clone)]
pub struct FitOutput {
    pub rows: Vec<SummaryRow>,
    pub summary_path: PathBuf,
}

/// Runs every estimator on every dataset and writes `summary.csv` (plus
/// traces when enabled). Rows are ordered by estimator, then dataset.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<FitOutput> {
    let (manifest, datasets) = load_datasets(&cfg.data_dir())?;
    let truth = if cfg.theta1_given {
        cfg.theta1
    } else {
        manifest.theta1
    };
    let sized = ExperimentConfig {
        rows: manifest.rows,
        cols: manifest.cols,
        ..cfg.clone()
    };
    let estimators = sized.estimators_with_ground_truth();
    let dims = Dims::new(manifest.rows, manifest.cols)?;
    for est in &estimators {
        check_compatible(est, dims)?;
    }
    create_dir(&cfg.out)?;

    let cells: Vec<(usize, usize)> = (0..estimators.len())
        .flat_map(|e| (0..datasets.len()).map(move |d| (e, d)))
        .collect();
    let results: Vec<CellResult> = pool(cfg.workers)?.install(|| {
        cells
            .par_iter()
            .map(|&(e, d)| fit_cell(&sized, &estimators[e], &datasets[d], d + 1, truth))
            .collect::<Result<Vec<_>>>()
    })?;

    let summary_path = cfg.out.join(SUMMARY_FILE);
    let rows: Vec<SummaryRow> = results.iter().map(|r| r.row.clone()).collect();
    write_summary(&summary_path, &rows)?;
    if cfg.trace {
        for r in &results {
            let path = cfg
                .out
                .join(format!("trace_{}_{}.csv", r.row.estimator, r.row.dataset));
            match &r.trace {
                Trace::Chain(s) => write_chain_trace(&path, s)?,
                Trace::Grid { grid, density } => write_grid_trace(&path, grid, density)?,
            }
        }
    }
    Ok(FitOutput { rows, summary_path })
}

/// Per-estimator tables derived from a summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Estimator label and average posterior variance, in first-seen order.
    pub variance: Vec<(String, f64)>,
    pub bias: Vec<BoxplotRow>,
}

pub fn summarize(rows: &[SummaryRow]) -> Report {
    let mut order: Vec<String> = Vec::new();
    for r in rows {
        if !order.contains(&r.estimator) {
            order.push(r.estimator.clone());
        }
    }
    let mut variance = Vec::with_capacity(order.len());
    let mut bias = Vec::with_capacity(order.len());
    for label in order {
        let mine: Vec<&SummaryRow> = rows.iter().filter(|r| r.estimator == label).collect();
        let avg = mine.iter().map(|r| r.post_var).sum::<f64>() / mine.len() as f64;
        let biases: Vec<f64> = mine.iter().map(|r| r.bias).collect();
        bias.push(five_number(&label, &biases));
        variance.push((label, avg));
    }
    Report { variance, bias }
}

/// Reads a summary CSV and writes the variance table and bias boxplot data
/// next to it (or into `out_dir`).
pub fn cmd_report(summary: &Path, out_dir: Option<&Path>) -> Result<Report> {
    let rows = read_summary(summary)?;
    if rows.is_empty() {
        return Err(HarnessError::data(format!("{} has no rows", summary.display())));
    }
    let report = summarize(&rows);
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| summary.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    create_dir(&dir)?;
    write_variance_table(&dir.join(VARIANCE_TABLE_FILE), &report.variance)?;
    write_boxplot(&dir.join(BOXPLOT_FILE), &report.bias)?;
    Ok(report)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median wall-clock time of single Metropolis iterations on `target`.
fn time_metropolis(target: impl Fn(f64) -> f64, init: f64, sd: f64, iters: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, 0);
    let step = Normal::new(0.0, sd).expect("positive sd");
    let mut current = init;
    let mut current_lp = target(init);
    let mut times = Vec::with_capacity(iters);
    for _ in 0..iters {
        let t = Instant::now();
        let prop = current + step.sample(&mut rng);
        let lp = target(prop);
        if rng.random::<f64>().ln() < lp - current_lp {
            current = prop;
            current_lp = lp;
        }
        times.push(t.elapsed().as_secs_f64());
    }
    median(times)
}

/// Times each estimator per MCMC iteration on one dataset and writes
/// `timing.csv`. The exact estimator is timed as Metropolis on the exact
/// likelihood.
pub fn cmd_benchmark(cfg: &ExperimentConfig) -> Result<Vec<TimingRow>> {
    let lat = match &cfg.data {
        Some(dir) => load_datasets(dir)?.1.into_iter().next().ok_or_else(|| {
            HarnessError::data(format!("{} lists no datasets", dir.display()))
        })?,
        None => {
            let method = resolve_method(cfg)?;
            simulate_datasets(ModelParams::ising(cfg.theta1), cfg.rows, cfg.cols, 1, method, cfg.seed)?
                .remove(0)
        }
    };
    let sized = ExperimentConfig {
        rows: lat.rows(),
        cols: lat.cols(),
        ..cfg.clone()
    };
    let prior = PriorSpec::default();
    let mut rows = Vec::new();
    for est in sized.estimators_with_ground_truth() {
        check_compatible(&est, lat.dims())?;
        let label = est.label();
        let seed = derive_seed(cfg.seed, &[TAG_BENCH, label_key(&label)]);
        let iters = cfg.bench_iters;
        let med = match est {
            EstimatorSpec::Exchange => {
                let inner = if RecursionPlan::new(lat.dims()).is_ok() {
                    InnerSampler::Exact
                } else {
                    InnerSampler::Gibbs {
                        sweeps: cfg.exchange_sweeps,
                    }
                };
                let times = (0..iters)
                    .map(|i| {
                        let mc = McmcConfig::new(1, 0, cfg.proposal_sd, seed ^ i as u64)?;
                        let t = Instant::now();
                        exchange(&lat, &prior, &mc, inner, cfg.theta1)?;
                        Ok(t.elapsed().as_secs_f64())
                    })
                    .collect::<Result<Vec<_>>>()?;
                median(times)
            }
            _ => {
                let objective = match est {
                    EstimatorSpec::Exact => Objective::Exact,
                    ref other => objective_for(other, seed).expect("likelihood-based estimator"),
                };
                let post = Posterior::new(&lat, &objective, prior)?;
                time_metropolis(
                    |t| post.log_density(ModelParams::ising(t)),
                    cfg.theta1,
                    cfg.proposal_sd,
                    iters,
                    seed,
                )
            }
        };
        rows.push(TimingRow {
            estimator: label,
            median_sec_per_iter: med,
            iters,
        });
    }
    create_dir(&cfg.out)?;
    write_timing(&cfg.out.join(TIMING_FILE), &rows)?;
    Ok(rows)
}
