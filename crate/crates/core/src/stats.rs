//! Friedman rank test over paired results and the Bonferroni-corrected
//! rank-sum post-hoc comparison against a reference algorithm.
//!
//! Lower values rank better throughout (minimization).

use std::fmt::Write as _;

use libm::erfc;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::harness::{format_sci, ExperimentReport};

/// Default significance level.
pub const DEFAULT_LEVEL: f64 = 0.01;
/// p-values below this are printed as `<2E-16`.
pub const P_FLOOR: f64 = 2e-16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 algorithms, got {0}")]
    TooFewAlgorithms(usize),
    #[error("need at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
    #[error("block {block} has {got} values, expected {expected}")]
    RaggedBlock {
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("block {block}, algorithm {algorithm}: value is NaN")]
    MissingValue { block: usize, algorithm: usize },
    #[error("unknown reference algorithm `{0}`")]
    UnknownReference(String),
    #[error("{benchmark}: {message}")]
    Table { benchmark: String, message: String },
}

/// `n` blocks of `k` paired values (one per algorithm).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedResults {
    algorithms: Vec<String>,
    blocks: Vec<Vec<f64>>,
}

impl PairedResults {
    pub fn new(algorithms: Vec<String>, blocks: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let k = algorithms.len();
        if k < 2 {
            return Err(StatsError::TooFewAlgorithms(k));
        }
        if blocks.len() < 2 {
            return Err(StatsError::TooFewBlocks(blocks.len()));
        }
        for (b, row) in blocks.iter().enumerate() {
            if row.len() != k {
                return Err(StatsError::RaggedBlock {
                    block: b,
                    expected: k,
                    got: row.len(),
                });
            }
            if let Some(a) = row.iter().position(|v| v.is_nan()) {
                return Err(StatsError::MissingValue {
                    block: b,
                    algorithm: a,
                });
            }
        }
        Ok(Self { algorithms, blocks })
    }

    /// Builds blocks from per-algorithm columns of equal length.
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Result<Self, StatsError> {
        let n = columns.first().map_or(0, |(_, c)| c.len());
        let (algorithms, cols): (Vec<String>, Vec<Vec<f64>>) = columns.into_iter().unzip();
        let mut blocks = vec![Vec::with_capacity(algorithms.len()); n];
        for col in &cols {
            if col.len() != n {
                return Err(StatsError::RaggedBlock {
                    block: col.len().min(n),
                    expected: n,
                    got: col.len(),
                });
            }
            for (row, &v) in blocks.iter_mut().zip(col) {
                row.push(v);
            }
        }
        Self::new(algorithms, blocks)
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        self.algorithms.len()
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    /// Within-block ranks (1 = smallest), ties get the mean of their ranks.
    pub fn ranks(&self) -> Vec<Vec<f64>> {
        self.blocks.iter().map(|row| mid_ranks(row)).collect()
    }

    /// Mean rank of each algorithm over all blocks.
    pub fn mean_ranks(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut sums = vec![0.0; self.k()];
        for row in self.ranks() {
            for (s, r) in sums.iter_mut().zip(row) {
                *s += r;
            }
        }
        sums.into_iter().map(|s| s / n).collect()
    }
}

fn mid_ranks(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) share ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    /// Tie-corrected Friedman chi-square.
    pub chi_square: f64,
    pub dof: usize,
    /// Upper tail of the chi-square distribution with `dof` degrees of freedom.
    pub p_value: f64,
    pub mean_ranks: Vec<f64>,
    /// Every block is fully tied; the statistic is reported as 0.
    pub degenerate: bool,
}

/// `chi2 = (k - 1) * sum_j (R_j - n(k+1)/2)^2 / (sum_ij r_ij^2 - n k (k+1)^2 / 4)`,
/// which is the classic statistic divided by the usual tie correction.
pub fn friedman_statistic(data: &PairedResults) -> FriedmanResult {
    let (n, k) = (data.n() as f64, data.k() as f64);
    let ranks = data.ranks();
    let mut sums = vec![0.0; data.k()];
    let mut sum_sq = 0.0;
    for row in &ranks {
        for (s, &r) in sums.iter_mut().zip(row) {
            *s += r;
            sum_sq += r * r;
        }
    }
    let expected = n * (k + 1.0) / 2.0;
    let numerator: f64 = sums.iter().map(|r| (r - expected).powi(2)).sum();
    let denominator = sum_sq - n * k * (k + 1.0).powi(2) / 4.0;
    let mean_ranks = sums.iter().map(|s| s / n).collect();
    let dof = data.k() - 1;
    // Scale-aware zero test: the denominator is a difference of O(n k^3) terms.
    if denominator <= 1e-9 * n * k * (k + 1.0).powi(2) {
        return FriedmanResult {
            chi_square: 0.0,
            dof,
            p_value: 1.0,
            mean_ranks,
            degenerate: true,
        };
    }
    let chi_square = (k - 1.0) * numerator / denominator;
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| d.sf(chi_square))
        .unwrap_or(f64::NAN);
    FriedmanResult {
        chi_square,
        dof,
        p_value,
        mean_ranks,
        degenerate: false,
    }
}

/// One reference-vs-competitor comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PosthocComparison {
    pub algorithm: String,
    pub z: f64,
    /// Two-sided normal tail before correction.
    pub raw_p: f64,
    /// `min(1, raw_p * (k - 1))`, never below the smallest positive `f64`.
    pub p_value: f64,
    pub reject: bool,
}

/// Compares `reference` with every other algorithm:
/// `z = (Rbar_ref - Rbar_j) / sqrt(k(k+1) / (6n))`, two-sided normal p,
/// Bonferroni-multiplied by `k - 1` and capped at 1.
pub fn pairwise_posthoc(
    data: &PairedResults,
    reference: &str,
    level: f64,
) -> Result<Vec<PosthocComparison>, StatsError> {
    let r = data
        .algorithms
        .iter()
        .position(|a| a == reference)
        .ok_or_else(|| StatsError::UnknownReference(reference.to_string()))?;
    let (n, k) = (data.n() as f64, data.k() as f64);
    let mean_ranks = data.mean_ranks();
    let se = (k * (k + 1.0) / (6.0 * n)).sqrt();
    Ok(data
        .algorithms
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != r)
        .map(|(j, name)| {
            let z = (mean_ranks[r] - mean_ranks[j]) / se;
            let raw_p = erfc(z.abs() / std::f64::consts::SQRT_2);
            let p_value = (raw_p * (k - 1.0)).clamp(f64::MIN_POSITIVE, 1.0);
            PosthocComparison {
                algorithm: name.clone(),
                z,
                raw_p,
                p_value,
                reject: p_value < level,
            }
        })
        .collect())
}

/// p-values of every competitor against a reference, one row per benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceTable {
    pub reference: String,
    pub competitors: Vec<String>,
    /// `(benchmark label, p-value per competitor)`.
    pub rows: Vec<(String, Vec<f64>)>,
}

/// `<2E-16` below the floor, otherwise 2-significant-digit scientific.
pub fn format_p_value(p: f64) -> String {
    if p < P_FLOOR {
        "<2E-16".to_string()
    } else {
        format_sci(p, 2)
    }
}

impl SignificanceTable {
    /// Comma-separated: `benchmark,<competitor>...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("benchmark");
        for c in &self.competitors {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (label, ps) in &self.rows {
            out.push_str(label);
            for &p in ps {
                let _ = write!(out, ",{}", format_p_value(p));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the post-hoc table from a report whose cells carry per-run values.
///
/// Cells are grouped by (benchmark, dimension); within a group each run index
/// is one block. Every group must contain the reference and the same set of
/// algorithms, all with the same number of runs.
pub fn significance_table(
    report: &ExperimentReport,
    reference: &str,
) -> Result<SignificanceTable, StatsError> {
    let algorithms = report.algorithms();
    if !algorithms.contains(&reference) {
        return Err(StatsError::UnknownReference(reference.to_string()));
    }
    if algorithms.len() < 2 {
        return Err(StatsError::TooFewAlgorithms(algorithms.len()));
    }
    let competitors: Vec<String> = algorithms
        .iter()
        .filter(|a| **a != reference)
        .map(|a| a.to_string())
        .collect();

    let mut groups: Vec<(&str, usize)> = Vec::new();
    for c in &report.cells {
        if !groups.contains(&(c.benchmark.as_str(), c.dimension)) {
            groups.push((c.benchmark.as_str(), c.dimension));
        }
    }
    let multi_dim = {
        let mut names: Vec<&str> = groups.iter().map(|g| g.0).collect();
        names.sort_unstable();
        let len = names.len();
        names.dedup();
        names.len() != len
    };

    let mut rows = Vec::new();
    for (benchmark, dimension) in groups {
        let label = if multi_dim {
            format!("{benchmark}@n{dimension}")
        } else {
            benchmark.to_string()
        };
        let table_err = |message: String| StatsError::Table {
            benchmark: label.clone(),
            message,
        };
        let mut columns = Vec::new();
        for alg in &algorithms {
            let cell = report
                .cells
                .iter()
                .find(|c| {
                    c.benchmark == benchmark && c.dimension == dimension && c.algorithm == *alg
                })
                .ok_or_else(|| table_err(format!("no results for `{alg}`")))?;
            if cell.finals.is_empty() {
                return Err(table_err(format!(
                    "`{alg}` has only summary statistics; per-run values are required"
                )));
            }
            columns.push((alg.to_string(), cell.finals.clone()));
        }
        let runs = columns[0].1.len();
        if let Some((alg, col)) = columns.iter().find(|(_, c)| c.len() != runs) {
            return Err(table_err(format!(
                "ragged run counts: `{}` has {runs}, `{alg}` has {}",
                columns[0].0,
                col.len()
            )));
        }
        let data = PairedResults::from_columns(columns).map_err(|e| table_err(e.to_string()))?;
        let post = pairwise_posthoc(&data, reference, DEFAULT_LEVEL)?;
        rows.push((label, post.into_iter().map(|c| c.p_value).collect()));
    }
    Ok(SignificanceTable {
        reference: reference.to_string(),
        competitors,
        rows,
    })
}
