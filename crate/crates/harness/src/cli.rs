use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, ConfigMap, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{cmd_benchmark, cmd_fit, cmd_report, cmd_simulate};

#[derive(Debug, Parser)]
#[command(name = "ccl", version, about = "Composite likelihood experiments for Ising lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate datasets and write them with a manifest.
    Simulate(ExperimentArgs),
    /// Fit every estimator to every dataset and write summary.csv.
    Fit(ExperimentArgs),
    /// Average posterior variances and bias five-number summaries.
    Report {
        /// Summary CSV written by `fit`.
        summary: PathBuf,
        /// Output directory (defaults to the summary's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median seconds per MCMC iteration for each estimator.
    Benchmark(ExperimentArgs),
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// Flat key = value config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Lattice size, e.g. 16x16.
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<String>,
    #[arg(long)]
    pub datasets: Option<String>,
    /// Comma-separated estimators, e.g. pseudo,ccl3,ccl4:0.4 or `standard`.
    #[arg(long)]
    pub estimators: Option<String>,
    #[arg(long)]
    pub iters: Option<String>,
    #[arg(long)]
    pub burnin: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Directory holding simulated datasets (defaults to --out).
    #[arg(long)]
    pub data: Option<String>,
    /// Data generation: auto, exact or gibbs.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub sweeps: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<String>,
    /// Write per-chain trace CSVs.
    #[arg(long)]
    pub trace: bool,
    /// Write 0 for sec_per_iter so summaries are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
    /// Any other config key, as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ExperimentArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut map = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    HarnessError::config(format!("cannot read config {}: {e}", path.display()))
                })?;
                parse_config(&text, &path.display().to_string())?
            }
            None => ConfigMap::default(),
        };
        let mut flags = ConfigMap::default();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| HarnessError::config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            flags.set(k.trim(), v.trim())?;
        }
        let named = [
            ("lattice", &self.lattice),
            ("theta1", &self.theta1),
            ("datasets", &self.datasets),
            ("estimators", &self.estimators),
            ("iters", &self.iters),
            ("burnin", &self.burnin),
            ("seed", &self.seed),
            ("out", &self.out),
            ("data", &self.data),
            ("method", &self.method),
            ("sweeps", &self.sweeps),
            ("workers", &self.workers),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                flags.set(key, v.as_str())?;
            }
        }
        if self.trace {
            flags.set("trace", "true")?;
        }
        if self.no_timing {
            flags.set("timing", "false")?;
        }
        map.merge(flags);
        ExperimentConfig::from_map(&map)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.to_config()?;
            let m = cmd_simulate(&cfg)?;
            println!(
                "wrote {} {}x{} datasets ({}) to {}",
                m.datasets,
                m.rows,
                m.cols,
                m.method,
                cfg.out.display()
            );
        }
        Command::Fit(args) => {
            let cfg = args.to_config()?;
            let out = cmd_fit(&cfg)?;
            println!("wrote {} rows to {}", out.rows.len(), out.summary_path.display());
        }
        Command::Report { summary, out } => {
            let report = cmd_report(&summary, out.as_deref())?;
            println!("average posterior variance");
            for (label, v) in &report.variance {
                println!("  {label:>10}  {v:.3e}");
            }
            println!("bias five-number summary (min q1 median q3 max)");
            for b in &report.bias {
                println!(
                    "  {:>10}  {:+.4} {:+.4} {:+.4} {:+.4} {:+.4}",
                    b.estimator, b.min, b.q1, b.median, b.q3, b.max
                );
            }
        }
        Command::Benchmark(args) => {
            let cfg = args.to_config()?;
            for row in cmd_benchmark(&cfg)? {
                println!(
                    "{:>10}  {:.3e} s/iter  ({} iters)",
                    row.estimator, row.median_sec_per_iter, row.iters
                );
            }
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 success, 1 usage/config error, 2 data/format error, 3 unsupported size.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
