//! Experiment configuration: a line-oriented `key = value` file with one
//! `[section]` per algorithm and optional `[objective NAME]` sections for
//! external objective programs.
//!
//! ```text
//! benchmarks = f1..f13, f21
//! dimension = 30
//! runs = 30
//! master_seed = 42
//!
//! [gsa]
//! alpha = 20
//!
//! [cogsa]
//! scale = 1
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cogsa_core::benchmark::TESTBED;
use cogsa_core::chaos::ChaoticAlphaConfig;
use cogsa_core::engine::{AlphaMode, EngineConfig, RandomDraws};
use cogsa_core::harness::StatisticMode;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    /// 0 when the problem is not tied to one line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.path, self.message)
        } else {
            write!(f, "{}:{}: {}", self.path, self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// One `[name]` section, resolved into an engine configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub name: String,
    pub engine: EngineConfig,
}

/// A program that reads coordinates on stdin and answers with a fitness line.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveConfig {
    pub name: String,
    pub command: Vec<String>,
    pub lower: f64,
    pub upper: f64,
    pub dimension: usize,
    pub optimum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithms: Vec<AlgorithmConfig>,
    pub objectives: Vec<ObjectiveConfig>,
    pub benchmarks: Vec<String>,
    /// False when `benchmarks` is the default full testbed.
    pub benchmarks_set: bool,
    pub dimension: usize,
    /// Dimensions of a scalability sweep.
    pub dims: Vec<usize>,
    pub population: usize,
    pub iterations: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub output: PathBuf,
    pub statistic: StatisticMode,
}

pub const DEFAULT_POPULATION: usize = 50;
pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_DIMENSION: usize = 30;
pub const DEFAULT_RUNS: usize = 30;
pub const TESTBED2_RUNS: usize = 51;
pub const TESTBED2_ITERATIONS: usize = 6000;
pub const TESTBED2_ALPHA_SCALE: f64 = 1.0 / 3.0;

/// Command-line overrides applied after the file is read.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub testbed2_style: bool,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.display().to_string(),
        line: 0,
        message: format!("cannot read: {e}"),
    })?;
    parse(&text, &path.display().to_string(), overrides)
}

#[derive(Debug, Default)]
struct RawSection {
    name: String,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

fn split_sections(text: &str, path: &str) -> Result<Vec<RawSection>, ConfigError> {
    let err = |line: usize, message: String| ConfigError {
        path: path.to_string(),
        line,
        message,
    };
    let mut sections = vec![RawSection::default()];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, format!("unterminated section header `{line}`")))?
                .trim();
            if name.is_empty() {
                return Err(err(line_no, "empty section name".into()));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(err(line_no, format!("section [{name}] appears twice")));
            }
            sections.push(RawSection {
                name: name.to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(err(line_no, "missing key before `=`".into()));
        }
        let current = sections.last_mut().expect("top-level section exists");
        if current.entries.iter().any(|(_, k, _)| *k == key) {
            return Err(err(
                line_no,
                format!("key `{key}` set twice in this section"),
            ));
        }
        current.entries.push((line_no, key, value));
    }
    Ok(sections)
}

fn strip_comment(line: &str) -> &str {
    let trimmed = line.trim_start();
    if trimmed.starts_with('#') || trimmed.starts_with(';') {
        return "";
    }
    match line.find(" #") {
        Some(i) => &line[..i],
        None => line,
    }
}

struct Ctx<'a> {
    path: &'a str,
    line: usize,
}

impl Ctx<'_> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn real(&self, key: &str, value: &str) -> Result<f64, ConfigError> {
        value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(format!("`{key}` expects a finite number, got `{value}`")))
    }

    fn count(&self, key: &str, value: &str) -> Result<usize, ConfigError> {
        value.parse::<usize>().map_err(|_| {
            self.err(format!(
                "`{key}` expects a non-negative integer, got `{value}`"
            ))
        })
    }

    fn boolean(&self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(self.err(format!("`{key}` expects true or false, got `{value}`"))),
        }
    }
}

fn list(value: &str) -> Vec<&str> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
}

/// Expands `fA..fB` ranges; other items are kept as written.
fn expand_benchmarks(ctx: &Ctx, value: &str) -> Result<Vec<String>, ConfigError> {
    let mut out = Vec::new();
    for item in list(value) {
        if let Some((a, b)) = item.split_once("..") {
            let index = |s: &str| {
                s.strip_prefix('f')
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|i| (1..=TESTBED.len()).contains(i))
                    .ok_or_else(|| ctx.err(format!("bad benchmark range `{item}`")))
            };
            let (lo, hi) = (index(a)?, index(b)?);
            if lo > hi {
                return Err(ctx.err(format!("empty benchmark range `{item}`")));
            }
            out.extend((lo..=hi).map(|i| format!("f{i}")));
        } else {
            out.push(item.to_string());
        }
    }
    Ok(out)
}

pub fn parse(
    text: &str,
    path: &str,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let sections = split_sections(text, path)?;
    let mut cfg = ExperimentConfig {
        algorithms: Vec::new(),
        objectives: Vec::new(),
        benchmarks: TESTBED.iter().map(|s| s.to_string()).collect(),
        benchmarks_set: false,
        dimension: DEFAULT_DIMENSION,
        dims: vec![50, 100],
        population: DEFAULT_POPULATION,
        iterations: DEFAULT_ITERATIONS,
        runs: DEFAULT_RUNS,
        master_seed: 0,
        output: PathBuf::from("results"),
        statistic: StatisticMode::RawFitness,
    };
    let mut statistic_set = false;
    let mut benchmarks_line = 0;

    for (line, key, value) in &sections[0].entries {
        let ctx = Ctx { path, line: *line };
        match key.as_str() {
            "benchmarks" => {
                cfg.benchmarks = expand_benchmarks(&ctx, value)?;
                cfg.benchmarks_set = true;
                benchmarks_line = *line;
            }
            "dimension" | "n" => cfg.dimension = ctx.count(key, value)?,
            "dims" => {
                cfg.dims = list(value)
                    .into_iter()
                    .map(|v| ctx.count(key, v))
                    .collect::<Result<_, _>>()?
            }
            "population" => cfg.population = ctx.count(key, value)?,
            "iterations" => cfg.iterations = ctx.count(key, value)?,
            "runs" => cfg.runs = ctx.count(key, value)?,
            "master_seed" | "seed" => {
                cfg.master_seed = value
                    .parse()
                    .map_err(|_| ctx.err(format!("`{key}` expects an unsigned 64-bit integer")))?
            }
            "output" => cfg.output = PathBuf::from(value),
            "statistic" => {
                cfg.statistic = match value.as_str() {
                    "raw" => StatisticMode::RawFitness,
                    "error" => StatisticMode::FitnessError,
                    _ => return Err(ctx.err(format!("`statistic` is raw or error, got `{value}`"))),
                };
                statistic_set = true;
            }
            _ => return Err(ctx.err(format!("unknown key `{key}`"))),
        }
    }

    if overrides.testbed2_style {
        cfg.runs = TESTBED2_RUNS;
        cfg.iterations = TESTBED2_ITERATIONS;
        if !statistic_set {
            cfg.statistic = StatisticMode::FitnessError;
        }
    }
    if let Some(seed) = overrides.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &overrides.output {
        cfg.output = out.clone();
    }

    let whole = Ctx { path, line: 0 };
    if cfg.population < 2 {
        return Err(whole.err("population must be at least 2"));
    }
    if cfg.iterations < 1 {
        return Err(whole.err("iterations must be at least 1"));
    }
    if cfg.runs < 1 {
        return Err(whole.err("runs must be at least 1"));
    }
    if cfg.dimension < 1 || cfg.dims.iter().any(|&d| d < 1) {
        return Err(whole.err("dimensions must be at least 1"));
    }

    for section in &sections[1..] {
        let ctx = Ctx {
            path,
            line: section.line,
        };
        let objective = if section.name == "objective" {
            Some("")
        } else {
            section.name.strip_prefix("objective ")
        };
        if let Some(name) = objective {
            let name = name.trim();
            if !valid_name(name) {
                return Err(ctx.err("objective sections are written `[objective NAME]`"));
            }
            cfg.objectives.push(objective_section(name, section, path)?);
        } else {
            if !valid_name(&section.name) {
                return Err(ctx.err(format!(
                    "algorithm name `{}` may only use letters, digits, `-`, `_` and `.`",
                    section.name
                )));
            }
            cfg.algorithms.push(algorithm_section(
                section,
                path,
                &cfg,
                overrides.testbed2_style,
            )?);
        }
    }
    if cfg.algorithms.is_empty() {
        for name in ["gsa", "cogsa"] {
            let section = RawSection {
                name: name.to_string(),
                ..RawSection::default()
            };
            cfg.algorithms.push(algorithm_section(
                &section,
                path,
                &cfg,
                overrides.testbed2_style,
            )?);
        }
    }

    let ctx = Ctx {
        path,
        line: benchmarks_line,
    };
    for b in &cfg.benchmarks {
        let known = TESTBED.contains(&b.as_str()) || cfg.objectives.iter().any(|o| &o.name == b);
        if !known {
            return Err(ctx.err(format!(
                "unknown benchmark `{b}` (use f1..f23 or an [objective] section)"
            )));
        }
    }
    if cfg.benchmarks.is_empty() {
        return Err(ctx.err("no benchmarks selected"));
    }
    Ok(cfg)
}

fn objective_section(
    name: &str,
    section: &RawSection,
    path: &str,
) -> Result<ObjectiveConfig, ConfigError> {
    let mut command = None;
    let mut lower = None;
    let mut upper = None;
    let mut dimension = None;
    let mut optimum = None;
    for (line, key, value) in &section.entries {
        let ctx = Ctx { path, line: *line };
        match key.as_str() {
            "command" => command = Some(list_words(value)),
            "lower" => lower = Some(ctx.real(key, value)?),
            "upper" => upper = Some(ctx.real(key, value)?),
            "dimension" | "n" => dimension = Some(ctx.count(key, value)?),
            "optimum" => optimum = Some(ctx.real(key, value)?),
            _ => return Err(ctx.err(format!("unknown objective key `{key}`"))),
        }
    }
    let ctx = Ctx {
        path,
        line: section.line,
    };
    let missing = |key: &str| ctx.err(format!("[objective {name}] needs `{key}`"));
    let command = command
        .filter(|c| !c.is_empty())
        .ok_or_else(|| missing("command"))?;
    let lower = lower.ok_or_else(|| missing("lower"))?;
    let upper = upper.ok_or_else(|| missing("upper"))?;
    let dimension = dimension
        .filter(|&d| d > 0)
        .ok_or_else(|| missing("dimension"))?;
    if lower >= upper {
        return Err(ctx.err(format!("[objective {name}] needs lower < upper")));
    }
    Ok(ObjectiveConfig {
        name: name.to_string(),
        command,
        lower,
        upper,
        dimension,
        optimum,
    })
}

fn list_words(value: &str) -> Vec<String> {
    value.split_whitespace().map(str::to_string).collect()
}

fn algorithm_section(
    section: &RawSection,
    path: &str,
    cfg: &ExperimentConfig,
    testbed2: bool,
) -> Result<AlgorithmConfig, ConfigError> {
    let (n, t) = (cfg.population, cfg.iterations);
    let lookup = |key: &str| section.entries.iter().find(|(_, k, _)| k == key);
    let base = match lookup("base") {
        Some((line, _, value)) => match value.as_str() {
            "gsa" => EngineConfig::gsa(n, t),
            "cogsa" => EngineConfig::cogsa(n, t),
            _ => {
                return Err(
                    Ctx { path, line: *line }.err(format!("`base` is gsa or cogsa, got `{value}`"))
                );
            }
        },
        None if section.name == "cogsa" => EngineConfig::cogsa(n, t),
        None => EngineConfig::gsa(n, t),
    };
    let mut engine = base;
    let mut chaotic = match engine.alpha_mode {
        AlphaMode::Chaotic(c) => Some(c),
        AlphaMode::Fixed(_) => None,
    };
    let mut fixed_alpha = match engine.alpha_mode {
        AlphaMode::Fixed(a) => Some(a),
        AlphaMode::Chaotic(_) => None,
    };
    let mut chaos_keys_line = None;

    for (line, key, value) in &section.entries {
        let ctx = Ctx { path, line: *line };
        match key.as_str() {
            "base" => {}
            "g0" => engine.g0 = ctx.real(key, value)?,
            "alpha" => {
                if value.eq_ignore_ascii_case("chaotic") {
                    chaotic.get_or_insert_with(|| ChaoticAlphaConfig::new(t));
                    fixed_alpha = None;
                } else {
                    fixed_alpha = Some(ctx.real(key, value)?);
                    chaotic = None;
                }
            }
            "amplitude" | "a" | "center" | "b" | "scale" => chaos_keys_line = Some(*line),
            "epsilon" => engine.epsilon = ctx.real(key, value)?,
            "kbest_final_fraction" => engine.kbest_final_fraction = ctx.real(key, value)?,
            "obl" => engine.obl_enabled = ctx.boolean(key, value)?,
            "chaos_seed" => engine.chaos_seed_value = ctx.real(key, value)?,
            "random_draws" => {
                engine.random_draws = match value.as_str() {
                    "shared" => RandomDraws::Shared,
                    "per-dimension" => RandomDraws::PerDimension,
                    _ => {
                        return Err(ctx.err(format!(
                            "`random_draws` is shared or per-dimension, got `{value}`"
                        )))
                    }
                }
            }
            _ => return Err(ctx.err(format!("unknown algorithm key `{key}`"))),
        }
    }

    match (&mut chaotic, fixed_alpha) {
        (Some(c), _) => {
            for (line, key, value) in &section.entries {
                let ctx = Ctx { path, line: *line };
                match key.as_str() {
                    "amplitude" | "a" => c.amplitude = ctx.real(key, value)?,
                    "center" | "b" => c.center = ctx.real(key, value)?,
                    "scale" => c.scale = ctx.real(key, value)?,
                    _ => {}
                }
            }
            if testbed2 {
                c.scale = TESTBED2_ALPHA_SCALE;
            }
            engine.alpha_mode = AlphaMode::Chaotic(*c);
        }
        (None, Some(a)) => {
            if let Some(line) = chaos_keys_line {
                return Err(
                    Ctx { path, line }.err("amplitude, center and scale need `alpha = chaotic`")
                );
            }
            engine.alpha_mode = AlphaMode::Fixed(a);
        }
        (None, None) => unreachable!("one alpha mode is always set"),
    }

    engine.validate().map_err(|e| {
        Ctx {
            path,
            line: section.line,
        }
        .err(format!("[{}]: {e}", section.name))
    })?;
    Ok(AlgorithmConfig {
        name: section.name.clone(),
        engine,
    })
}
