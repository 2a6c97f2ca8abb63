//! Experiment configuration: a flat `key = value` file, overridden by
//! command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use ccl_core::samplers::GridSpec;
use ccl_core::MAX_LAG;

use crate::error::{HarnessError, Result};

/// Keys accepted in config files and `--set` overrides.
pub const KNOWN_KEYS: &[&str] = &[
    "lattice",
    "theta1",
    "datasets",
    "estimators",
    "iters",
    "burnin",
    "thin",
    "proposal_sd",
    "tune",
    "seed",
    "out",
    "data",
    "method",
    "sweeps",
    "workers",
    "grid_lo",
    "grid_hi",
    "grid_step",
    "exchange_iters",
    "exchange_burnin",
    "exchange_sweeps",
    "trace",
    "timing",
    "bench_iters",
];

/// Raw key/value pairs with the line each came from (0 for flags).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigMap {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Inserts or overrides a value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(HarnessError::config(format!("unknown config key {key:?}")));
        }
        self.entries.insert(key.to_string(), (value.into(), 0));
        Ok(())
    }

    pub fn merge(&mut self, other: ConfigMap) {
        self.entries.extend(other.entries);
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(_, l)| *l)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str, file: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |message: String| HarnessError::Parse {
            file: file.to_string(),
            line,
            message,
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| perr(format!("expected key = value, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(perr(format!("unknown key {key:?}")));
        }
        if map.entries.contains_key(key) {
            return Err(perr(format!("duplicate key {key:?}")));
        }
        map.entries
            .insert(key.to_string(), (value.to_string(), line));
    }
    Ok(map)
}

/// One inference method applied to each dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    /// Exact posterior on a θ1 grid.
    Exact,
    Pseudo,
    /// Conditional composite likelihood with `k × k` blocks, keeping
    /// `fraction` of them.
    Ccl { k: usize, fraction: f64 },
    /// Exchange algorithm.
    Exchange,
}

impl EstimatorSpec {
    /// Block fractions that equalize per-iteration cost on 16×16 lattices.
    pub fn budget_fraction(k: usize) -> f64 {
        match k {
            4 => 0.4,
            5 => 0.2,
            6 => 0.1,
            _ => 1.0,
        }
    }

    pub fn standard_set() -> Vec<EstimatorSpec> {
        let mut v: Vec<_> = (3..=6)
            .map(|k| EstimatorSpec::Ccl {
                k,
                fraction: Self::budget_fraction(k),
            })
            .collect();
        v.push(EstimatorSpec::Pseudo);
        v
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Exact => "exact".into(),
            EstimatorSpec::Pseudo => "pseudo".into(),
            EstimatorSpec::Ccl { k, .. } => format!("ccl{k}"),
            EstimatorSpec::Exchange => "exchange".into(),
        }
    }

    pub fn is_ground_truth(&self) -> bool {
        matches!(self, EstimatorSpec::Exact | EstimatorSpec::Exchange)
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::Ccl { k, fraction } => write!(f, "ccl{k}:{fraction}"),
            other => f.write_str(&other.label()),
        }
    }
}

fn split_top_level(list: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in list.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&list[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&list[start..]);
    out
}

fn parse_ccl(body: &str) -> Option<(usize, Option<f64>)> {
    let body = body.trim();
    if let Some(inner) = body.strip_prefix('(').and_then(|b| b.strip_suffix(')')) {
        let mut parts = inner.split(',').map(str::trim);
        let k = parts.next()?.parse().ok()?;
        let f = match parts.next() {
            Some(f) => Some(f.parse().ok()?),
            None => None,
        };
        if parts.next().is_some() {
            return None;
        }
        return Some((k, f));
    }
    match body.split_once(':') {
        Some((k, f)) => Some((k.trim().parse().ok()?, Some(f.trim().parse().ok()?))),
        None => Some((body.parse().ok()?, None)),
    }
}

/// Parses a comma-separated estimator list. Accepts `exact`, `exact-grid`,
/// `pseudo`, `exchange`, `ccl3`, `ccl4:0.4`, `ccl(4,0.4)` and the shorthand
/// `standard` for the default CCL/pseudolikelihood set.
pub fn parse_estimators(list: &str) -> Result<Vec<EstimatorSpec>> {
    let mut out = Vec::new();
    for tok in split_top_level(list) {
        let tok = tok.trim();
        let lower = tok.to_ascii_lowercase();
        match lower.as_str() {
            "" => continue,
            "standard" => out.extend(EstimatorSpec::standard_set()),
            "exact" | "exact-grid" | "exact_grid" | "true" => out.push(EstimatorSpec::Exact),
            "pseudo" | "pl" => out.push(EstimatorSpec::Pseudo),
            "exchange" => out.push(EstimatorSpec::Exchange),
            s if s.starts_with("ccl") => {
                let (k, fraction) = parse_ccl(&s[3..])
                    .ok_or_else(|| HarnessError::config(format!("malformed estimator {tok:?}")))?;
                if k == 0 || k > MAX_LAG {
                    return Err(HarnessError::config(format!(
                        "block size in {tok:?} must lie in 1..={MAX_LAG}"
                    )));
                }
                let fraction = fraction.unwrap_or_else(|| EstimatorSpec::budget_fraction(k));
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(HarnessError::config(format!(
                        "block fraction in {tok:?} must lie in (0, 1]"
                    )));
                }
                out.push(EstimatorSpec::Ccl { k, fraction });
            }
            _ => return Err(HarnessError::config(format!("unknown estimator {tok:?}"))),
        }
    }
    Ok(out)
}

/// How `simulate` generates data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    /// Exact when the lag allows it, Gibbs otherwise.
    Auto,
    Exact,
    Gibbs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rows: usize,
    pub cols: usize,
    pub theta1: f64,
    /// Whether `theta1` was given explicitly rather than defaulted.
    pub theta1_given: bool,
    pub datasets: usize,
    pub estimators: Vec<EstimatorSpec>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_sd: f64,
    pub tune: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub data: Option<PathBuf>,
    pub method: MethodChoice,
    pub sweeps: usize,
    pub workers: usize,
    pub grid: GridSpec,
    pub exchange_iters: usize,
    pub exchange_burnin: usize,
    pub exchange_sweeps: usize,
    pub trace: bool,
    pub timing: bool,
    pub bench_iters: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            rows: 16,
            cols: 16,
            theta1: 0.4,
            theta1_given: false,
            datasets: 20,
            estimators: EstimatorSpec::standard_set(),
            iterations: 5000,
            burn_in: 1000,
            thin: 1,
            proposal_sd: 0.05,
            tune: true,
            seed: 1,
            out: PathBuf::from("out"),
            data: None,
            method: MethodChoice::Auto,
            sweeps: 10_000,
            workers: 0,
            grid: GridSpec::default(),
            exchange_iters: 5000,
            exchange_burnin: 1000,
            exchange_sweeps: 10,
            trace: false,
            timing: true,
            bench_iters: 200,
        }
    }
}

fn parse_num<T: std::str::FromStr>(map: &ConfigMap, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| {
            let line = map.line_of(key);
            let at = if line > 0 {
                format!(" (line {line})")
            } else {
                String::new()
            };
            HarnessError::config(format!("invalid value {v:?} for {key}{at}"))
        }),
    }
}

fn parse_bool(map: &ConfigMap, key: &str) -> Result<Option<bool>> {
    match map.get(key).map(str::to_ascii_lowercase).as_deref() {
        None => Ok(None),
        Some("true" | "yes" | "1" | "on") => Ok(Some(true)),
        Some("false" | "no" | "0" | "off") => Ok(Some(false)),
        Some(v) => Err(HarnessError::config(format!("invalid boolean {v:?} for {key}"))),
    }
}

/// Parses `MxN` (or a single `M` for a square lattice).
pub fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let err = || HarnessError::config(format!("invalid lattice size {s:?}, expected MxN"));
    let lower = s.trim().to_ascii_lowercase();
    let (m, n) = match lower.split_once('x') {
        Some((m, n)) => (m.trim().parse().map_err(|_| err())?, n.trim().parse().map_err(|_| err())?),
        None => {
            let m = lower.parse().map_err(|_| err())?;
            (m, m)
        }
    };
    if m == 0 || n == 0 {
        return Err(err());
    }
    Ok((m, n))
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        if let Some(v) = map.get("lattice") {
            (c.rows, c.cols) = parse_dims(v)?;
        }
        if let Some(v) = parse_num::<f64>(map, "theta1")? {
            c.theta1 = v;
            c.theta1_given = true;
        }
        if let Some(v) = parse_num(map, "datasets")? {
            c.datasets = v;
        }
        if let Some(v) = map.get("estimators") {
            c.estimators = parse_estimators(v)?;
        }
        if let Some(v) = parse_num(map, "iters")? {
            c.iterations = v;
            if map.get("exchange_iters").is_none() {
                c.exchange_iters = v;
            }
        }
        if let Some(v) = parse_num(map, "burnin")? {
            c.burn_in = v;
            if map.get("exchange_burnin").is_none() {
                c.exchange_burnin = v;
            }
        }
        if let Some(v) = parse_num(map, "thin")? {
            c.thin = v;
        }
        if let Some(v) = parse_num(map, "proposal_sd")? {
            c.proposal_sd = v;
        }
        if let Some(v) = parse_bool(map, "tune")? {
            c.tune = v;
        }
        if let Some(v) = parse_num(map, "seed")? {
            c.seed = v;
        }
        if let Some(v) = map.get("out") {
            c.out = PathBuf::from(v);
        }
        if let Some(v) = map.get("data") {
            c.data = Some(PathBuf::from(v));
        }
        if let Some(v) = map.get("method") {
            c.method = match v.to_ascii_lowercase().as_str() {
                "auto" => MethodChoice::Auto,
                "exact" => MethodChoice::Exact,
                "gibbs" => MethodChoice::Gibbs,
                other => return Err(HarnessError::config(format!("unknown method {other:?}"))),
            };
        }
        if let Some(v) = parse_num(map, "sweeps")? {
            c.sweeps = v;
        }
        if let Some(v) = parse_num(map, "workers")? {
            c.workers = v;
        }
        if let Some(v) = parse_num(map, "grid_lo")? {
            c.grid.lo = v;
        }
        if let Some(v) = parse_num(map, "grid_hi")? {
            c.grid.hi = v;
        }
        if let Some(v) = parse_num(map, "grid_step")? {
            c.grid.step = v;
        }
        if let Some(v) = parse_num(map, "exchange_iters")? {
            c.exchange_iters = v;
        }
        if let Some(v) = parse_num(map, "exchange_burnin")? {
            c.exchange_burnin = v;
        }
        if let Some(v) = parse_num(map, "exchange_sweeps")? {
            c.exchange_sweeps = v;
        }
        if let Some(v) = parse_bool(map, "trace")? {
            c.trace = v;
        }
        if let Some(v) = parse_bool(map, "timing")? {
            c.timing = v;
        }
        if let Some(v) = parse_num(map, "bench_iters")? {
            c.bench_iters = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::config(m));
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        let mut labels: Vec<String> = self.estimators.iter().map(EstimatorSpec::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("estimator {} listed more than once", w[0]));
        }
        if self.datasets == 0 {
            return bad("datasets must be at least 1".into());
        }
        if !self.theta1.is_finite() {
            return bad("theta1 must be finite".into());
        }
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return bad(format!(
                "need 0 <= burnin < iters, got burnin {} iters {}",
                self.burn_in, self.iterations
            ));
        }
        if self.exchange_iters == 0 || self.exchange_burnin >= self.exchange_iters {
            return bad("need 0 <= exchange_burnin < exchange_iters".into());
        }
        if self.thin == 0 {
            return bad("thin must be positive".into());
        }
        if !(self.proposal_sd > 0.0 && self.proposal_sd.is_finite()) {
            return bad("proposal_sd must be positive".into());
        }
        if self.grid.points().is_err() {
            return bad("invalid grid_lo/grid_hi/grid_step".into());
        }
        if self.bench_iters < 100 {
            return bad("bench_iters must be at least 100".into());
        }
        Ok(())
    }

    pub fn lag(&self) -> usize {
        self.rows.min(self.cols)
    }

    /// Estimators to run, with the ground truth appended when absent: the
    /// exact grid posterior when the lag allows it, exchange otherwise.
    pub fn estimators_with_ground_truth(&self) -> Vec<EstimatorSpec> {
        let mut v = self.estimators.clone();
        if !v.iter().any(EstimatorSpec::is_ground_truth) {
            v.push(if self.lag() <= MAX_LAG {
                EstimatorSpec::Exact
            } else {
                EstimatorSpec::Exchange
            });
        }
        v
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data.clone().unwrap_or_else(|| self.out.clone())
    }
}
