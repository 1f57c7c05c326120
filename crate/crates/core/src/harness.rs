//! Multi-run experiments: seed splitting, batches, scalability sweeps,
//! summary statistics and the on-disk record/report formats.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

use crate::benchmark::{is_scalable, make_benchmark, BenchmarkError, Objective};
use crate::engine::{self, EngineConfig, EngineError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no runs for {benchmark}/{algorithm}")]
    EmptyCell {
        benchmark: String,
        algorithm: String,
    },
    #[error("{0} is not scalable; only f1..f13 can be swept over dimensions")]
    NotScalable(String),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error("run {run_index} (seed {seed}) of {algorithm} on {benchmark} failed: {source}")]
    RunFailed {
        algorithm: String,
        benchmark: String,
        run_index: usize,
        seed: u64,
        source: EngineError,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: String,
    pub benchmark: String,
    pub dimension: usize,
    pub seed: u64,
    /// Best fitness seen so far, after each iteration.
    pub best_trace: Vec<f64>,
    pub final_best_fitness: f64,
    /// Empty for records loaded from disk.
    pub final_best_position: Vec<f64>,
    pub evaluations: u64,
    pub wall_time: Duration,
}

/// Child seed of run `index` under `master`: the `index + 1`-th output of a
/// SplitMix64 generator started at `master`.
pub fn split_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add(
        (index as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A run that errored inside a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub run_index: usize,
    pub seed: u64,
    pub error: EngineError,
}

pub type BatchResult = Vec<Result<RunRecord, RunFailure>>;

fn one_run<O: Objective + ?Sized>(
    algorithm: &str,
    objective: &O,
    cfg: &EngineConfig,
    master_seed: u64,
    index: usize,
) -> Result<RunRecord, RunFailure> {
    let seed = split_seed(master_seed, index);
    engine::run(objective, cfg, seed)
        .map(|mut r| {
            r.algorithm = algorithm.to_string();
            r
        })
        .map_err(|error| RunFailure {
            run_index: index,
            seed,
            error,
        })
}

/// `runs` independent runs, in parallel on the current rayon pool. Results are
/// in run order and identical to [`run_batch_sequential`].
pub fn run_batch<O: Objective + ?Sized>(
    algorithm: &str,
    objective: &O,
    cfg: &EngineConfig,
    runs: usize,
    master_seed: u64,
) -> BatchResult {
    (0..runs)
        .into_par_iter()
        .map(|i| one_run(algorithm, objective, cfg, master_seed, i))
        .collect()
}

pub fn run_batch_sequential<O: Objective + ?Sized>(
    algorithm: &str,
    objective: &O,
    cfg: &EngineConfig,
    runs: usize,
    master_seed: u64,
) -> BatchResult {
    (0..runs)
        .map(|i| one_run(algorithm, objective, cfg, master_seed, i))
        .collect()
}

/// Splits a batch into records, turning the first failure into an error.
pub fn collect_batch(
    algorithm: &str,
    benchmark: &str,
    batch: BatchResult,
) -> Result<Vec<RunRecord>, HarnessError> {
    batch
        .into_iter()
        .map(|r| {
            r.map_err(|f| HarnessError::RunFailed {
                algorithm: algorithm.to_string(),
                benchmark: benchmark.to_string(),
                run_index: f.run_index,
                seed: f.seed,
                source: f.error,
            })
        })
        .collect()
}

/// What the summary statistics are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StatisticMode {
    /// Final best fitness as returned by the objective.
    #[default]
    RawFitness,
    /// `|final - known optimum|`.
    FitnessError,
}

/// Statistics of one (benchmark, algorithm, dimension) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub benchmark: String,
    pub algorithm: String,
    pub dimension: usize,
    pub mean: f64,
    pub best: f64,
    /// Sample standard deviation (divisor `runs - 1`); 0 for a single run.
    pub sd: f64,
    pub runs: usize,
    /// The per-run values the statistics were computed from, in run order.
    pub finals: Vec<f64>,
}

impl CellSummary {
    pub fn from_values(
        benchmark: impl Into<String>,
        algorithm: impl Into<String>,
        dimension: usize,
        finals: Vec<f64>,
    ) -> Result<Self, HarnessError> {
        let benchmark = benchmark.into();
        let algorithm = algorithm.into();
        if finals.is_empty() {
            return Err(HarnessError::EmptyCell {
                benchmark,
                algorithm,
            });
        }
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let best = finals.iter().copied().fold(f64::INFINITY, f64::min);
        let sd = if finals.len() > 1 {
            (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            benchmark,
            algorithm,
            dimension,
            mean,
            best,
            sd,
            runs: finals.len(),
            finals,
        })
    }

    /// True when the SD is the single-run convention rather than a sample SD.
    pub fn sd_is_degenerate(&self) -> bool {
        self.runs < 2
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub mode: StatisticMode,
    pub cells: Vec<CellSummary>,
}

impl ExperimentReport {
    pub fn cell(&self, benchmark: &str, algorithm: &str, dimension: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.benchmark == benchmark && c.algorithm == algorithm && c.dimension == dimension
        })
    }

    pub fn benchmarks(&self) -> Vec<&str> {
        unique(self.cells.iter().map(|c| c.benchmark.as_str()))
    }

    pub fn algorithms(&self) -> Vec<&str> {
        unique(self.cells.iter().map(|c| c.algorithm.as_str()))
    }

    pub fn merge(&mut self, other: ExperimentReport) {
        self.cells.extend(other.cells);
    }
}

fn unique<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

/// Mean / best / SD of final fitness per (benchmark, algorithm, dimension),
/// cells in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Result<ExperimentReport, HarnessError> {
    summarize_with(records, StatisticMode::RawFitness, |_, _| None)
}

/// Like [`summarize`]; in [`StatisticMode::FitnessError`] mode each value is
/// `|final - optimum(benchmark, dimension)|` (records without a known optimum
/// keep their raw value).
pub fn summarize_with<F>(
    records: &[RunRecord],
    mode: StatisticMode,
    optimum: F,
) -> Result<ExperimentReport, HarnessError>
where
    F: Fn(&str, usize) -> Option<f64>,
{
    let mut keys: Vec<(&str, &str, usize)> = Vec::new();
    for r in records {
        let key = (r.benchmark.as_str(), r.algorithm.as_str(), r.dimension);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let cells = keys
        .into_iter()
        .map(|(benchmark, algorithm, dimension)| {
            let finals = records
                .iter()
                .filter(|r| {
                    r.benchmark == benchmark && r.algorithm == algorithm && r.dimension == dimension
                })
                .map(|r| match (mode, optimum(benchmark, dimension)) {
                    (StatisticMode::FitnessError, Some(opt)) => (r.final_best_fitness - opt).abs(),
                    _ => r.final_best_fitness,
                })
                .collect();
            CellSummary::from_values(benchmark, algorithm, dimension, finals)
        })
        .collect::<Result<_, _>>()?;
    Ok(ExperimentReport { mode, cells })
}

/// Known optimum of a testbed function, for [`StatisticMode::FitnessError`].
pub fn testbed_optimum(benchmark: &str, dimension: usize) -> Option<f64> {
    make_benchmark(benchmark, dimension)
        .ok()
        .map(|b| b.known_optimum())
}

/// Runs every algorithm on every scalable benchmark at every dimension.
///
/// Cells appear dimension-major, then benchmark, then algorithm. Within a cell
/// run `i` uses `split_seed(master_seed, i)`.
pub fn scalability_sweep(
    algorithms: &[(String, EngineConfig)],
    benchmarks: &[String],
    dims: &[usize],
    runs: usize,
    master_seed: u64,
) -> Result<(ExperimentReport, Vec<RunRecord>), HarnessError> {
    if let Some(fixed) = benchmarks.iter().find(|b| !is_scalable(b)) {
        return Err(HarnessError::NotScalable(fixed.clone()));
    }
    let mut records = Vec::new();
    for &dim in dims {
        for name in benchmarks {
            let spec = make_benchmark(name, dim)?;
            for (label, cfg) in algorithms {
                let batch = run_batch(label, &spec, cfg, runs, master_seed);
                records.extend(collect_batch(label, spec.name(), batch)?);
            }
        }
    }
    Ok((summarize(&records)?, records))
}

/// Scientific notation with 17 significant digits; round-trips through
/// `f64::from_str`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Scientific notation with `digits` significant digits and a signed two-digit
/// exponent, e.g. `6.82E-17`.
pub fn format_sci(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), v);
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

/// Line-oriented record file: five `key=value` header lines followed by one
/// `iter,best_so_far` line per iteration.
pub fn record_to_string(record: &RunRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "algorithm={}", record.algorithm);
    let _ = writeln!(out, "benchmark={}", record.benchmark);
    let _ = writeln!(out, "dimension={}", record.dimension);
    let _ = writeln!(out, "seed={}", record.seed);
    let _ = writeln!(out, "evaluations={}", record.evaluations);
    for (i, v) in record.best_trace.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, format_f64(*v));
    }
    out
}

pub fn parse_record(text: &str, path: &str) -> Result<RunRecord, HarnessError> {
    let err = |line: usize, message: String| HarnessError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let mut header = |key: &str| -> Result<String, HarnessError> {
        let (i, line) = lines
            .next()
            .ok_or_else(|| err(0, format!("missing `{key}=` header")))?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| err(i + 1, format!("expected `{key}=`, found `{line}`")))
    };
    let algorithm = header("algorithm")?;
    let benchmark = header("benchmark")?;
    let dimension = header("dimension")?
        .parse()
        .map_err(|e| err(3, format!("bad dimension: {e}")))?;
    let seed = header("seed")?
        .parse()
        .map_err(|e| err(4, format!("bad seed: {e}")))?;
    let evaluations = header("evaluations")?
        .parse()
        .map_err(|e| err(5, format!("bad evaluation count: {e}")))?;

    let mut best_trace = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (iter, value) = line.split_once(',').ok_or_else(|| {
            err(
                i + 1,
                format!("expected `iter,best_so_far`, found `{line}`"),
            )
        })?;
        let iter: usize = iter
            .parse()
            .map_err(|e| err(i + 1, format!("bad iteration: {e}")))?;
        if iter != best_trace.len() + 1 {
            return Err(err(
                i + 1,
                format!(
                    "iteration {iter} out of sequence (expected {})",
                    best_trace.len() + 1
                ),
            ));
        }
        let value: f64 = value
            .parse()
            .map_err(|e| err(i + 1, format!("bad fitness value: {e}")))?;
        best_trace.push(value);
    }
    let final_best_fitness = *best_trace
        .last()
        .ok_or_else(|| err(0, "record has no trace".to_string()))?;
    Ok(RunRecord {
        algorithm,
        benchmark,
        dimension,
        seed,
        best_trace,
        final_best_fitness,
        final_best_position: Vec::new(),
        evaluations,
        wall_time: Duration::ZERO,
    })
}

pub fn read_record(path: &Path) -> Result<RunRecord, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_record(&text, &path.display().to_string())
}

/// `<algorithm>_<benchmark>_n<dim>_run<index>.rec`
pub fn record_file_name(record: &RunRecord, run_index: usize) -> String {
    format!(
        "{}_{}_n{}_run{:03}.rec",
        record.algorithm, record.benchmark, record.dimension, run_index
    )
}

pub const REPORT_HEADER: &str = "benchmark,algorithm,mean,best,sd,runs,dimension,finals";

/// Comma-separated report: the six summary columns, then the dimension and the
/// `;`-separated per-run values the summary was computed from.
pub fn report_to_string(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{REPORT_HEADER}");
    for c in &report.cells {
        let finals = c
            .finals
            .iter()
            .map(|v| format_f64(*v))
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.benchmark,
            c.algorithm,
            format_f64(c.mean),
            format_f64(c.best),
            format_f64(c.sd),
            c.runs,
            c.dimension,
            finals
        );
    }
    out
}

/// Parses a report. The `dimension` and `finals` columns are optional so that
/// result tables of other algorithms can be imported with just the summary
/// columns (such cells cannot take part in rank statistics).
pub fn parse_report(text: &str, path: &str) -> Result<ExperimentReport, HarnessError> {
    let err = |line: usize, message: String| HarnessError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty report".to_string()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| columns.iter().position(|c| *c == name);
    let required = ["benchmark", "algorithm", "mean", "best", "sd", "runs"];
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(required) {
        *slot = col(name).ok_or_else(|| err(1, format!("missing column `{name}`")))?;
    }
    let dim_col = col("dimension");
    let finals_col = col("finals");

    let mut cells = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(err(
                i + 1,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let num = |j: usize, what: &str| -> Result<f64, HarnessError> {
            fields[j]
                .parse::<f64>()
                .map_err(|e| err(i + 1, format!("bad {what} `{}`: {e}", fields[j])))
        };
        let runs: usize = fields[idx[5]]
            .parse()
            .map_err(|e| err(i + 1, format!("bad run count: {e}")))?;
        let dimension = match dim_col {
            Some(j) => fields[j]
                .parse()
                .map_err(|e| err(i + 1, format!("bad dimension: {e}")))?,
            None => 0,
        };
        let finals: Vec<f64> = match finals_col {
            Some(j) if !fields[j].is_empty() => fields[j]
                .split(';')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| err(i + 1, format!("bad per-run value `{v}`: {e}")))
                })
                .collect::<Result<_, _>>()?,
            _ => Vec::new(),
        };
        if !finals.is_empty() && finals.len() != runs {
            return Err(err(
                i + 1,
                format!("runs = {runs} but {} per-run values", finals.len()),
            ));
        }
        cells.push(CellSummary {
            benchmark: fields[idx[0]].to_string(),
            algorithm: fields[idx[1]].to_string(),
            dimension,
            mean: num(idx[2], "mean")?,
            best: num(idx[3], "best")?,
            sd: num(idx[4], "sd")?,
            runs,
            finals,
        });
    }
    Ok(ExperimentReport {
        mode: StatisticMode::RawFitness,
        cells,
    })
}

pub fn read_report(path: &Path) -> Result<ExperimentReport, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_report(&text, &path.display().to_string())
}

/// Mean/SD grid with one row per (dimension, algorithm) and a `_mean`, `_sd`
/// column pair per benchmark, values in 3-significant-digit scientific form.
pub fn scalability_table(report: &ExperimentReport) -> String {
    let benchmarks = report.benchmarks();
    let algorithms = report.algorithms();
    let mut dims: Vec<usize> = report.cells.iter().map(|c| c.dimension).collect();
    dims.dedup();
    dims.sort_unstable();
    dims.dedup();

    let mut out = String::from("dim,algorithm");
    for b in &benchmarks {
        let _ = write!(out, ",{b}_mean,{b}_sd");
    }
    out.push('\n');
    for &d in &dims {
        for a in &algorithms {
            let _ = write!(out, "{d},{a}");
            for b in &benchmarks {
                match report.cell(b, a, d) {
                    Some(c) => {
                        let _ = write!(out, ",{},{}", format_sci(c.mean, 3), format_sci(c.sd, 3));
                    }
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Writes `contents` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
