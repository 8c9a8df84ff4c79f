use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;

use super::data::{generate_problem, mean, median, standard_error, stream_rng};
use super::methods::Method;
use crate::error::{Error, Result};
use crate::spectral::svd;
use crate::sure::SureSettings;

pub const DEFAULT_TRIALS: usize = 10;

/// Ranks x SNRs x trials for one matrix size, plus the methods to compare.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub n: usize,
    pub m: usize,
    pub ranks: Vec<usize>,
    pub snrs: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl ExperimentGrid {
    /// 50x50, every rank, SNR in {0.5, 1, 2, 4}, ten trials, all methods.
    pub fn paper(seed: u64) -> Self {
        Self {
            n: 50,
            m: 50,
            ranks: (1..=50).collect(),
            snrs: vec![0.5, 1.0, 2.0, 4.0],
            trials: DEFAULT_TRIALS,
            seed,
            methods: Method::all(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Dimension {
                expected: "at least 1x1".into(),
                found: format!("{}x{}", self.n, self.m),
            });
        }
        let l = self.n.min(self.m);
        if self.trials == 0 {
            return Err(Error::range("trials", 0.0, "trials >= 1"));
        }
        if self.ranks.is_empty() {
            return Err(Error::Contract("ranks list is empty".into()));
        }
        if let Some(&r) = self.ranks.iter().find(|&&r| r == 0 || r > l) {
            return Err(Error::range("r", r as f64, "1 <= r <= min(n, m)"));
        }
        if self.snrs.is_empty() {
            return Err(Error::Contract("snrs list is empty".into()));
        }
        if let Some(&s) = self.snrs.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::range("snr", s, "snr > 0"));
        }
        if self.methods.is_empty() {
            return Err(Error::Contract("methods list is empty".into()));
        }
        self.methods.iter().try_for_each(Method::validate)
    }

    fn problems(&self) -> Vec<(usize, f64, usize)> {
        let mut out = Vec::with_capacity(self.ranks.len() * self.snrs.len() * self.trials);
        for &r in &self.ranks {
            for &snr in &self.snrs {
                for trial in 0..self.trials {
                    out.push((r, snr, trial));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker cap; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Fill `median_time_s`. Off by default because timings make tables
    /// non-reproducible.
    pub record_times: bool,
    pub settings: SureSettings,
}

impl RunOptions {
    fn install<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(job()),
            Some(0) => Err(Error::range("threads", 0.0, "threads >= 1")),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map(|pool| pool.install(job))
                .map_err(|e| Error::Contract(format!("thread pool: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmseRow {
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub snr: f64,
    pub trials: usize,
    pub nmse: Option<f64>,
    pub nmse_stderr: Option<f64>,
    pub median_time_s: Option<f64>,
    /// `ok` or `error: <first failure>`.
    pub status: String,
}

impl NmseRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmseTable {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub version: String,
    pub rows: Vec<NmseRow>,
}

pub const NMSE_COLUMNS: [&str; 10] = [
    "method",
    "n",
    "m",
    "r",
    "snr",
    "trials",
    "nmse",
    "nmse_stderr",
    "median_time_s",
    "status",
];

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\"").replace('\n', " "))
    } else {
        text.to_string()
    }
}

fn opt(value: Option<f64>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

impl NmseTable {
    pub fn row(&self, method: &Method, r: usize, snr: f64) -> Option<&NmseRow> {
        let name = method.to_string();
        self.rows
            .iter()
            .find(|row| row.method == name && row.r == r && row.snr == snr)
    }

    /// `#` metadata lines, header, one row per (method, r, snr). The
    /// timestamp line is emitted only when given.
    pub fn write_csv<W: Write>(&self, out: &mut W, timestamp: Option<&str>) -> io::Result<()> {
        writeln!(out, "# seed = {}", self.seed)?;
        writeln!(out, "# version = {}", self.version)?;
        writeln!(out, "# dims = {}x{}", self.n, self.m)?;
        writeln!(out, "# trials = {}", self.trials)?;
        if let Some(ts) = timestamp {
            writeln!(out, "# timestamp = {ts}")?;
        }
        writeln!(out, "{}", NMSE_COLUMNS.join(","))?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                csv_field(&row.method),
                row.n,
                row.m,
                row.r,
                row.snr,
                row.trials,
                opt(row.nmse),
                opt(row.nmse_stderr),
                opt(row.median_time_s),
                csv_field(&row.status)
            )?;
        }
        Ok(())
    }
}

struct Sample {
    ratio: Result<f64>,
    seconds: f64,
}

/// With `record_times` each method pays for its own SVD, as a caller would;
/// otherwise one factorization is shared.
fn run_problem(
    grid: &ExperimentGrid,
    (r, snr, trial): (usize, f64, usize),
    settings: &SureSettings,
    record_times: bool,
) -> Vec<Sample> {
    let mut rng = stream_rng(grid.seed, &[r as u64, snr.to_bits(), trial as u64]);
    let (x, problem) = match generate_problem(grid.n, grid.m, r, snr, &mut rng) {
        Ok(pair) => pair,
        Err(e) => {
            return grid
                .methods
                .iter()
                .map(|_| Sample {
                    ratio: Err(e.clone()),
                    seconds: 0.0,
                })
                .collect()
        }
    };
    let energy = x.norm_squared();
    let shared = (!record_times).then(|| svd(problem.observed()));
    grid.methods
        .iter()
        .map(|method| {
            let start = Instant::now();
            let estimate = match &shared {
                None => method.denoise(&problem, r, settings),
                Some(Ok(factors)) => method.denoise_factored(&problem, factors, r, settings),
                Some(Err(e)) => Err(e.clone()),
            };
            let seconds = start.elapsed().as_secs_f64();
            Sample {
                ratio: estimate.map(|est| (est - &x).norm_squared() / energy),
                seconds,
            }
        })
        .collect()
}

fn cell_row<'a>(
    grid: &ExperimentGrid,
    method: &Method,
    r: usize,
    snr: f64,
    cell: impl Iterator<Item = &'a Sample>,
    record_times: bool,
) -> NmseRow {
    let mut ratios = Vec::with_capacity(grid.trials);
    let mut times = Vec::with_capacity(grid.trials);
    let mut failure = None;
    for sample in cell {
        times.push(sample.seconds);
        match &sample.ratio {
            Ok(v) => ratios.push(*v),
            Err(e) => {
                failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let ok = failure.is_none();
    NmseRow {
        method: method.to_string(),
        n: grid.n,
        m: grid.m,
        r,
        snr,
        trials: grid.trials,
        nmse: ok.then(|| mean(&ratios)),
        nmse_stderr: ok.then(|| standard_error(&ratios)),
        median_time_s: record_times.then(|| median(&mut times)),
        status: failure.map_or_else(|| "ok".into(), |e| format!("error: {e}")),
    }
}

/// [`run_sweep_with`] on default options.
pub fn run_sweep(grid: &ExperimentGrid) -> Result<NmseTable> {
    run_sweep_with(grid, &RunOptions::default())
}

/// Runs every method on every (r, snr, trial) realization. Each realization
/// draws from its own stream keyed by `(seed, r, snr, trial)`, so the table
/// does not depend on scheduling. Failures become error rows.
pub fn run_sweep_with(grid: &ExperimentGrid, options: &RunOptions) -> Result<NmseTable> {
    grid.validate()?;
    let problems = grid.problems();
    let settings = options.settings.clone();
    let samples: Vec<Vec<Sample>> = options.install(|| {
        problems
            .par_iter()
            .map(|&key| run_problem(grid, key, &settings, options.record_times))
            .collect()
    })?;

    let mut rows = Vec::with_capacity(grid.methods.len() * grid.ranks.len() * grid.snrs.len());
    for (mi, method) in grid.methods.iter().enumerate() {
        for (ri, &r) in grid.ranks.iter().enumerate() {
            for (si, &snr) in grid.snrs.iter().enumerate() {
                let base = (ri * grid.snrs.len() + si) * grid.trials;
                let cell = samples[base..base + grid.trials].iter().map(|t| &t[mi]);
                rows.push(cell_row(grid, method, r, snr, cell, options.record_times));
            }
        }
    }
    Ok(NmseTable {
        seed: grid.seed,
        n: grid.n,
        m: grid.m,
        trials: grid.trials,
        version: env!("CARGO_PKG_VERSION").to_string(),
        rows,
    })
}

pub fn default_c_values() -> Vec<f64> {
    (1..=20).map(f64::from).collect()
}

pub fn default_k_values() -> Vec<usize> {
    (1..=5).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCell {
    pub c: f64,
    pub k: usize,
    /// Mean NMSE over the grid's ranks and SNRs; `None` if any cell failed.
    pub mean_nmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub table: NmseTable,
    pub cells: Vec<SensitivityCell>,
    pub best: Option<SensitivityCell>,
}

impl SensitivityReport {
    pub fn cell(&self, c: f64, k: usize) -> Option<&SensitivityCell> {
        self.cells.iter().find(|s| s.c == c && s.k == k)
    }

    pub fn write_summary_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "c,k,mean_nmse,best")?;
        for cell in &self.cells {
            let best = self.best.as_ref() == Some(cell);
            writeln!(
                out,
                "{},{},{},{}",
                cell.c,
                cell.k,
                opt(cell.mean_nmse),
                best
            )?;
        }
        Ok(())
    }
}

/// SVLET over every `(C, K)` pair on the base grid's data (the base
/// grid's method list is ignored).
pub fn sensitivity_sweep(
    base: &ExperimentGrid,
    c_values: &[f64],
    k_values: &[usize],
    options: &RunOptions,
) -> Result<SensitivityReport> {
    if c_values.is_empty() || k_values.is_empty() {
        return Err(Error::Contract(
            "sensitivity sweep needs C and K values".into(),
        ));
    }
    let pairs: Vec<(f64, usize)> = c_values
        .iter()
        .flat_map(|&c| k_values.iter().map(move |&k| (c, k)))
        .collect();
    let grid = ExperimentGrid {
        methods: pairs.iter().map(|&(c, k)| Method::Svlet { c, k }).collect(),
        ..base.clone()
    };
    let table = run_sweep_with(&grid, options)?;

    let cells: Vec<SensitivityCell> = pairs
        .iter()
        .map(|&(c, k)| {
            let name = Method::Svlet { c, k }.to_string();
            let values: Option<Vec<f64>> = table
                .rows
                .iter()
                .filter(|row| row.method == name)
                .map(|row| row.nmse)
                .collect();
            SensitivityCell {
                c,
                k,
                mean_nmse: values.map(|v| mean(&v)),
            }
        })
        .collect();
    let best = cells
        .iter()
        .filter(|cell| cell.mean_nmse.is_some())
        .min_by(|a, b| a.mean_nmse.unwrap().total_cmp(&b.mean_nmse.unwrap()))
        .cloned();
    Ok(SensitivityReport { table, cells, best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: String,
    pub samples: usize,
    pub median_time_s: Option<f64>,
    /// Median time over the first SVLET method's median time.
    pub ratio_to_svlet: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn median(&self, method: &Method) -> Option<f64> {
        let name = method.to_string();
        self.rows.iter().find(|r| r.method == name)?.median_time_s
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "method,samples,median_time_s,ratio_to_svlet")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                row.method,
                row.samples,
                opt(row.median_time_s),
                opt(row.ratio_to_svlet)
            )?;
        }
        Ok(())
    }
}

/// Median single-threaded wall time per method, including the SVD.
/// Methods run back to back on each realization, in an order rotated per
/// realization so no method always follows the same neighbor.
pub fn timing_report(grid: &ExperimentGrid, settings: &SureSettings) -> Result<TimingTable> {
    grid.validate()?;
    let methods = &grid.methods;
    let mut times = vec![Vec::new(); methods.len()];
    let problems = grid.problems();

    // Warm caches and the allocator before timing anything.
    if let Some(&(r, snr, trial)) = problems.first() {
        let mut rng = stream_rng(grid.seed, &[r as u64, snr.to_bits(), trial as u64]);
        let (_, problem) = generate_problem(grid.n, grid.m, r, snr, &mut rng)?;
        for method in methods {
            let _ = method.denoise(&problem, r, settings);
        }
    }

    for (p, &(r, snr, trial)) in problems.iter().enumerate() {
        let mut rng = stream_rng(grid.seed, &[r as u64, snr.to_bits(), trial as u64]);
        let (_, problem) = generate_problem(grid.n, grid.m, r, snr, &mut rng)?;
        for offset in 0..methods.len() {
            let mi = (p + offset) % methods.len();
            let start = Instant::now();
            let outcome = methods[mi].denoise(&problem, r, settings);
            let seconds = start.elapsed().as_secs_f64();
            if outcome.is_ok() {
                times[mi].push(seconds);
            }
        }
    }

    let medians: Vec<Option<f64>> = times
        .iter_mut()
        .map(|t| (!t.is_empty()).then(|| median(t)))
        .collect();
    let reference = methods
        .iter()
        .position(|m| matches!(m, Method::Svlet { .. }))
        .and_then(|i| medians[i]);
    let rows = methods
        .iter()
        .zip(&medians)
        .zip(&times)
        .map(|((method, &med), t)| TimingRow {
            method: method.to_string(),
            samples: t.len(),
            median_time_s: med,
            ratio_to_svlet: med.zip(reference).map(|(a, b)| a / b),
        })
        .collect();
    Ok(TimingTable { rows })
}
