use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::Command;

use cogsa_core::benchmark::{
    is_scalable, make_benchmark, verify_optima, ExternalObjective, Objective,
};
use cogsa_core::harness::{
    format_f64, format_sci, read_record, read_report, record_file_name, record_to_string,
    report_to_string, run_batch, scalability_sweep, scalability_table, summarize_with,
    testbed_optimum, write_atomic, ExperimentReport, RunRecord,
};
use cogsa_core::obl::Bounds;
use cogsa_core::stats::{format_p_value, significance_table};
use rayon::ThreadPool;
use thiserror::Error;

use crate::config::{ExperimentConfig, ObjectiveConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn build_objective(cfg: &ExperimentConfig, name: &str) -> Result<Box<dyn Objective>, CliError> {
    if let Some(o) = cfg.objectives.iter().find(|o| o.name == name) {
        return spawn_external(o).map(|e| Box::new(e) as Box<dyn Objective>);
    }
    let spec = make_benchmark(name, cfg.dimension).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Box::new(spec))
}

fn spawn_external(o: &ObjectiveConfig) -> Result<ExternalObjective, CliError> {
    let bounds = Bounds::uniform(o.lower, o.upper, o.dimension).map_err(runtime)?;
    let mut command = Command::new(&o.command[0]);
    command.args(&o.command[1..]);
    let objective = ExternalObjective::spawn(o.name.clone(), bounds, command).map_err(runtime)?;
    Ok(match o.optimum {
        Some(opt) => objective.with_known_optimum(opt),
        None => objective,
    })
}

fn optimum_lookup(cfg: &ExperimentConfig) -> impl Fn(&str, usize) -> Option<f64> + '_ {
    move |benchmark, dimension| match cfg.objectives.iter().find(|o| o.name == benchmark) {
        Some(o) => o.optimum,
        None => testbed_optimum(benchmark, dimension),
    }
}

fn write_records(dir: &Path, records: &[(usize, RunRecord)]) -> Result<(), CliError> {
    let records_dir = dir.join("records");
    create_dir(&records_dir)?;
    for (index, record) in records {
        write_file(
            &records_dir.join(record_file_name(record, *index)),
            &record_to_string(record),
        )?;
    }
    Ok(())
}

/// Fixed-width summary: one line per cell.
pub fn summary_table(report: &ExperimentReport) -> String {
    let mut out = format!(
        "{:<10} {:<12} {:>5} {:>10} {:>10} {:>10} {:>5}\n",
        "benchmark", "algorithm", "dim", "mean", "best", "sd", "runs"
    );
    for c in &report.cells {
        let sd = if c.sd_is_degenerate() {
            format!("{}*", format_sci(c.sd, 2))
        } else {
            format_sci(c.sd, 2)
        };
        let _ = writeln!(
            out,
            "{:<10} {:<12} {:>5} {:>10} {:>10} {:>10} {:>5}",
            c.benchmark,
            c.algorithm,
            c.dimension,
            format_sci(c.mean, 2),
            format_sci(c.best, 2),
            sd,
            c.runs
        );
    }
    if report.cells.iter().any(|c| c.sd_is_degenerate()) {
        out.push_str("* single run: SD reported as 0\n");
    }
    out
}

pub fn run(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(), CliError> {
    let mut records: Vec<(usize, RunRecord)> = Vec::new();
    let mut failures = Vec::new();
    for benchmark in &cfg.benchmarks {
        let objective = build_objective(cfg, benchmark)?;
        for alg in &cfg.algorithms {
            let batch = pool.install(|| {
                run_batch(
                    &alg.name,
                    objective.as_ref(),
                    &alg.engine,
                    cfg.runs,
                    cfg.master_seed,
                )
            });
            for (index, result) in batch.into_iter().enumerate() {
                match result {
                    Ok(record) => records.push((index, record)),
                    Err(f) => failures.push(format!(
                        "{} on {benchmark}: run {} (seed {}) failed: {}",
                        alg.name, f.run_index, f.seed, f.error
                    )),
                }
            }
        }
    }

    create_dir(&cfg.output)?;
    write_records(&cfg.output, &records)?;
    let plain: Vec<RunRecord> = records.into_iter().map(|(_, r)| r).collect();
    if !plain.is_empty() {
        let report = summarize_with(&plain, cfg.statistic, optimum_lookup(cfg)).map_err(runtime)?;
        write_file(&cfg.output.join("report.csv"), &report_to_string(&report))?;
        print!("{}", summary_table(&report));
    }
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        eprintln!("error: {f}");
    }
    Err(CliError::Runtime(format!(
        "{} run(s) failed; completed records were kept",
        failures.len()
    )))
}

pub fn scale(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(), CliError> {
    let benchmarks: Vec<String> = if cfg.benchmarks_set {
        cfg.benchmarks.clone()
    } else {
        cfg.benchmarks
            .iter()
            .filter(|b| is_scalable(b))
            .cloned()
            .collect()
    };
    if let Some(fixed) = benchmarks.iter().find(|b| !is_scalable(b)) {
        return Err(CliError::Usage(format!(
            "{fixed} has a fixed dimension; a scalability sweep takes f1..f13 only"
        )));
    }
    let algorithms: Vec<_> = cfg
        .algorithms
        .iter()
        .map(|a| (a.name.clone(), a.engine.clone()))
        .collect();
    let (_, records) = pool
        .install(|| {
            scalability_sweep(
                &algorithms,
                &benchmarks,
                &cfg.dims,
                cfg.runs,
                cfg.master_seed,
            )
        })
        .map_err(runtime)?;

    create_dir(&cfg.output)?;
    // records are ordered cell by cell, runs in order within each cell
    let indexed: Vec<(usize, RunRecord)> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (i % cfg.runs, r.clone()))
        .collect();
    write_records(&cfg.output, &indexed)?;
    let report = summarize_with(&records, cfg.statistic, optimum_lookup(cfg)).map_err(runtime)?;
    write_file(&cfg.output.join("report.csv"), &report_to_string(&report))?;
    let table = scalability_table(&report);
    write_file(&cfg.output.join("scalability.csv"), &table)?;
    print!("{table}");
    Ok(())
}

pub fn compare(
    paths: &[PathBuf],
    reference: &str,
    level: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::Usage(format!(
            "--level must lie in (0, 1), got {level}"
        )));
    }
    let mut merged = ExperimentReport::default();
    let mut seen = HashSet::new();
    for path in paths {
        let report = read_report(path).map_err(runtime)?;
        for c in &report.cells {
            if !seen.insert((c.benchmark.clone(), c.algorithm.clone(), c.dimension)) {
                return Err(CliError::Usage(format!(
                    "{}: {}/{} at n={} appears in more than one report",
                    path.display(),
                    c.benchmark,
                    c.algorithm,
                    c.dimension
                )));
            }
        }
        merged.merge(report);
    }
    let table =
        significance_table(&merged, reference).map_err(|e| CliError::Usage(e.to_string()))?;

    let width = table
        .rows
        .iter()
        .map(|(l, _)| l.len())
        .max()
        .unwrap_or(0)
        .max(9);
    let mut text = format!("{:<width$}", "benchmark");
    for c in &table.competitors {
        let _ = write!(text, " {c:>12}");
    }
    text.push('\n');
    for (label, ps) in &table.rows {
        let _ = write!(text, "{label:<width$}");
        for &p in ps {
            let mark = if p < level { "*" } else { " " };
            let _ = write!(text, " {:>11}{mark}", format_p_value(p));
        }
        text.push('\n');
    }
    let _ = writeln!(text, "reference: {reference}; * p < {level}");
    print!("{text}");
    if let Some(path) = out {
        write_file(path, &table.to_csv())?;
    }
    Ok(())
}

/// Record paths, with directories replaced by their `.rec` files in name order.
fn expand_record_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| runtime(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "rec"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub struct TraceOptions {
    pub log10: bool,
    pub floor: f64,
    pub every: usize,
}

pub const TRACE_HEADER: &str = "algorithm,benchmark,seed,iteration,best_so_far";

pub fn trace_rows(record: &RunRecord, opts: &TraceOptions, out: &mut String) {
    let last = record.best_trace.len();
    for (i, &v) in record.best_trace.iter().enumerate() {
        let iteration = i + 1;
        if iteration != 1 && iteration != last && iteration % opts.every != 0 {
            continue;
        }
        let value = if opts.log10 {
            format_f64(v.max(opts.floor).log10())
        } else {
            format_f64(v)
        };
        let _ = writeln!(
            out,
            "{},{},{},{iteration},{value}",
            record.algorithm, record.benchmark, record.seed
        );
    }
}

pub fn trace(paths: &[PathBuf], opts: &TraceOptions, out: Option<&Path>) -> Result<(), CliError> {
    if opts.every == 0 {
        return Err(CliError::Usage("--every must be at least 1".into()));
    }
    if !(opts.floor > 0.0 && opts.floor.is_finite()) {
        return Err(CliError::Usage("--floor must be a positive number".into()));
    }
    let files = expand_record_paths(paths)?;
    if files.is_empty() {
        return Err(CliError::Usage("no record files given".into()));
    }
    let mut text = format!("{TRACE_HEADER}\n");
    let mut skipped = 0;
    for f in &files {
        match read_record(f) {
            Ok(record) => trace_rows(&record, opts, &mut text),
            Err(e) => {
                eprintln!("skipping {}: {e}", f.display());
                skipped += 1;
            }
        }
    }
    match out {
        Some(path) => write_file(path, &text)?,
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| runtime(format!("stdout: {e}")))?,
    }
    if skipped > 0 {
        return Err(CliError::Runtime(format!(
            "{skipped} record file(s) skipped"
        )));
    }
    Ok(())
}

pub fn verify(out: Option<&Path>) -> Result<(), CliError> {
    let checks = verify_optima();
    let mut text = format!(
        "{:<4} {:<3} {:>3} {:>24} {:>24} {:>11} {:>9} {:>9}  result\n",
        "fn", "cls", "n", "f(x*)", "f_min", "reported", "|error|", "tol"
    );
    let mut csv = String::from("benchmark,modality,dimension,value,known_optimum,reported_optimum,error,tolerance,passed\n");
    for c in &checks {
        let _ = writeln!(
            text,
            "{:<4} {:<3} {:>3} {:>24} {:>24} {:>11} {:>9} {:>9}  {}",
            c.name,
            c.modality,
            c.dimension,
            format_f64(c.value),
            format_f64(c.known_optimum),
            c.reported_optimum,
            format_sci(c.error(), 2),
            format_sci(c.tolerance, 0),
            if c.passed { "ok" } else { "FAIL" }
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            c.name,
            c.modality,
            c.dimension,
            format_f64(c.value),
            format_f64(c.known_optimum),
            c.reported_optimum,
            format_f64(c.error()),
            c.tolerance,
            c.passed
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(
        text,
        "{} of {} functions verified",
        checks.len() - failed,
        checks.len()
    );
    print!("{text}");
    if let Some(path) = out {
        write_file(path, &csv)?;
    }
    if failed > 0 {
        return Err(CliError::Runtime(format!(
            "{failed} function(s) failed verification"
        )));
    }
    Ok(())
}
