//! CSV and manifest formats written and read by the harness.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{HarnessError, Result};

pub const SUMMARY_HEADER: [&str; 7] = [
    "estimator",
    "dataset",
    "post_mean",
    "bias",
    "post_var",
    "accept_rate",
    "sec_per_iter",
];

pub const TIMING_HEADER: [&str; 3] = ["estimator", "median_sec_per_iter", "iters"];

pub const BOXPLOT_HEADER: [&str; 6] = ["estimator", "min", "q1", "median", "q3", "max"];

/// One estimator applied to one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: String,
    pub dataset: usize,
    pub post_mean: f64,
    /// Always `post_mean − true θ1`.
    pub bias: f64,
    pub post_var: f64,
    pub accept_rate: f64,
    pub sec_per_iter: f64,
}

impl SummaryRow {
    pub fn new(
        estimator: impl Into<String>,
        dataset: usize,
        post_mean: f64,
        truth: f64,
        post_var: f64,
        accept_rate: f64,
        sec_per_iter: f64,
    ) -> Self {
        SummaryRow {
            estimator: estimator.into(),
            dataset,
            post_mean,
            bias: post_mean - truth,
            post_var,
            accept_rate,
            sec_per_iter,
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let ctx = || format!("writing {}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(e, ctx()))?;
    w.write_record(header).map_err(|e| csv_io(e, ctx()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_io(e, ctx()))?;
    }
    w.flush().map_err(|e| HarnessError::io(ctx(), e))?;
    Ok(())
}

fn csv_io(e: csv::Error, context: String) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(context, io),
        other => HarnessError::data(format!("{context}: {other:?}")),
    }
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(
        path,
        &SUMMARY_HEADER,
        rows.iter().map(|r| {
            vec![
                r.estimator.clone(),
                r.dataset.to_string(),
                r.post_mean.to_string(),
                r.bias.to_string(),
                r.post_var.to_string(),
                r.accept_rate.to_string(),
                r.sec_per_iter.to_string(),
            ]
        }),
    )
}

fn parse_field<T: std::str::FromStr>(v: &str, col: &str, line: usize, file: &str) -> Result<T> {
    v.trim().parse().map_err(|_| HarnessError::Parse {
        file: file.to_string(),
        line,
        message: format!("invalid {col} value {v:?}"),
    })
}

/// Parses a summary CSV; errors report the 1-based line (the header is line 1).
pub fn parse_summary(text: &str, file: &str) -> Result<Vec<SummaryRow>> {
    let perr = |line: usize, message: String| HarnessError::Parse {
        file: file.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(perr(1, "empty summary file".into())),
        Some(r) => r.map_err(|e| perr(1, e.to_string()))?,
    };
    if header.iter().map(str::trim).ne(SUMMARY_HEADER.iter().copied()) {
        return Err(perr(
            1,
            format!("expected header {:?}", SUMMARY_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (idx, rec) in records.enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| perr(line, e.to_string()))?;
        if rec.len() != SUMMARY_HEADER.len() {
            return Err(perr(
                line,
                format!("expected {} fields, found {}", SUMMARY_HEADER.len(), rec.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            let v: f64 = parse_field(&rec[i], SUMMARY_HEADER[i], line, file)?;
            if !v.is_finite() {
                return Err(perr(line, format!("non-finite {} value", SUMMARY_HEADER[i])));
            }
            Ok(v)
        };
        let estimator = rec[0].trim().to_string();
        if estimator.is_empty() {
            return Err(perr(line, "empty estimator label".into()));
        }
        out.push(SummaryRow {
            estimator,
            dataset: parse_field(&rec[1], "dataset", line, file)?,
            post_mean: num(2)?,
            bias: num(3)?,
            post_var: num(4)?,
            accept_rate: num(5)?,
            sec_per_iter: num(6)?,
        });
    }
    Ok(out)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    parse_summary(&text, &path.display().to_string())
}

/// Chain trace: post burn-in draw index and value.
pub fn write_chain_trace(path: &Path, samples: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["iteration", "theta1"],
        samples
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), v.to_string()]),
    )
}

/// Grid posterior trace: grid point and normalized density.
pub fn write_grid_trace(path: &Path, grid: &[f64], density: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["theta1", "density"],
        grid.iter()
            .zip(density)
            .map(|(g, d)| vec![g.to_string(), d.to_string()]),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub estimator: String,
    pub median_sec_per_iter: f64,
    pub iters: usize,
}

pub fn write_timing(path: &Path, rows: &[TimingRow]) -> Result<()> {
    write_csv(
        path,
        &TIMING_HEADER,
        rows.iter().map(|r| {
            vec![
                r.estimator.clone(),
                r.median_sec_per_iter.to_string(),
                r.iters.to_string(),
            ]
        }),
    )
}

/// Five-number summary of one estimator's biases.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotRow {
    pub estimator: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxplotRow {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn write_boxplot(path: &Path, rows: &[BoxplotRow]) -> Result<()> {
    write_csv(
        path,
        &BOXPLOT_HEADER,
        rows.iter().map(|r| {
            vec![
                r.estimator.clone(),
                r.min.to_string(),
                r.q1.to_string(),
                r.median.to_string(),
                r.q3.to_string(),
                r.max.to_string(),
            ]
        }),
    )
}

/// One column per estimator, one row of average posterior variances.
pub fn write_variance_table(path: &Path, table: &[(String, f64)]) -> Result<()> {
    let header: Vec<&str> = table.iter().map(|(l, _)| l.as_str()).collect();
    write_csv(
        path,
        &header,
        std::iter::once(table.iter().map(|(_, v)| v.to_string()).collect()),
    )
}

/// Provenance of a simulated dataset collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub theta0: f64,
    pub theta1: f64,
    pub rows: usize,
    pub cols: usize,
    pub datasets: usize,
    /// `exact` or `gibbs`.
    pub method: String,
    pub sweeps: Option<usize>,
    pub seed: u64,
}

pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn dataset_file_name(id: usize) -> String {
    format!("dataset_{id}.txt")
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "theta0 = {}", self.theta0);
        let _ = writeln!(s, "theta1 = {}", self.theta1);
        let _ = writeln!(s, "rows = {}", self.rows);
        let _ = writeln!(s, "cols = {}", self.cols);
        let _ = writeln!(s, "datasets = {}", self.datasets);
        let _ = writeln!(s, "method = {}", self.method);
        if let Some(sw) = self.sweeps {
            let _ = writeln!(s, "sweeps = {sw}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let perr = |line: usize, message: String| HarnessError::Parse {
            file: file.to_string(),
            line,
            message,
        };
        let mut fields = std::collections::HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| perr(line, format!("expected key = value, found {content:?}")))?;
            fields.insert(k.trim().to_string(), (v.trim().to_string(), line));
        }
        fn take<T: std::str::FromStr>(
            fields: &std::collections::HashMap<String, (String, usize)>,
            key: &str,
            file: &str,
        ) -> Result<T> {
            let (v, line) = fields.get(key).ok_or_else(|| HarnessError::Parse {
                file: file.to_string(),
                line: 0,
                message: format!("missing {key}"),
            })?;
            parse_field(v, key, *line, file)
        }
        let sweeps = match fields.get("sweeps") {
            Some((v, line)) => Some(parse_field(v, "sweeps", *line, file)?),
            None => None,
        };
        Ok(Manifest {
            theta0: take(&fields, "theta0", file)?,
            theta1: take(&fields, "theta1", file)?,
            rows: take(&fields, "rows", file)?,
            cols: take(&fields, "cols", file)?,
            datasets: take(&fields, "datasets", file)?,
            method: take(&fields, "method", file)?,
            sweeps,
            seed: take(&fields, "seed", file)?,
        })
    }
}

/// Linear-interpolation quantile of sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number(estimator: &str, values: &[f64]) -> BoxplotRow {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    BoxplotRow {
        estimator: estimator.to_string(),
        min: quantile_sorted(&v, 0.0),
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: quantile_sorted(&v, 1.0),
    }
}
