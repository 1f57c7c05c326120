//! The 23-function classical testbed (f1..f23), the [`Objective`] trait every
//! optimizer run consumes, and the plug-in objectives for user-supplied
//! functions.

use std::f64::consts::{E, PI};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::obl::Bounds;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("{name}: expected {expected} coordinates, got {got}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{name}: external objective failed: {reason}")]
    External { name: String, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchmarkError {
    #[error("unknown benchmark `{0}` (expected f1..f23)")]
    UnknownName(String),
    #[error("{0} needs a dimension of at least 1")]
    ZeroDimension(String),
    #[error("{name} has a fixed dimension of {fixed}; cannot use {requested}")]
    FixedDimension {
        name: String,
        fixed: usize,
        requested: usize,
    },
}

/// Something an optimizer can minimize over a box.
///
/// `noise` is the run's random stream. Deterministic objectives ignore it;
/// noisy ones (f7) must draw from it so a seeded run stays reproducible.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn bounds(&self) -> &Bounds;

    fn dimension(&self) -> usize {
        self.bounds().dim()
    }

    /// Global minimum, when known. Used for fitness-error reporting.
    fn known_optimum(&self) -> Option<f64> {
        None
    }

    fn evaluate(&self, x: &[f64], noise: &mut dyn RngCore) -> Result<f64, ObjectiveError>;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn bounds(&self) -> &Bounds {
        (**self).bounds()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn known_optimum(&self) -> Option<f64> {
        (**self).known_optimum()
    }
    fn evaluate(&self, x: &[f64], noise: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        (**self).evaluate(x, noise)
    }
}

/// Characteristic column of the testbed table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Unimodal,
    Multimodal,
    MultimodalFixedDim,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Unimodal => "U",
            Modality::Multimodal => "M",
            Modality::MultimodalFixedDim => "MFD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Function {
    Sphere,
    Schwefel222,
    Schwefel12,
    Schwefel221,
    Rosenbrock,
    Step,
    QuarticNoise,
    Schwefel226,
    Rastrigin,
    Ackley,
    Griewank,
    Penalized1,
    Penalized2,
    Foxholes,
    Kowalik,
    SixHumpCamel,
    Branin,
    GoldsteinPrice,
    Hartmann3,
    Hartmann6,
    Shekel5,
    Shekel7,
    Shekel10,
}

/// One function of the classical testbed at a concrete dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    name: String,
    function: Function,
    bounds: Bounds,
    known_optimum: f64,
    reported_optimum: f64,
    modality: Modality,
}

/// Names of the full testbed, in order.
pub const TESTBED: [&str; 23] = [
    "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10", "f11", "f12", "f13", "f14", "f15",
    "f16", "f17", "f18", "f19", "f20", "f21", "f22", "f23",
];

/// Builds benchmark `name` (`f1`..`f23`).
///
/// `dimension` applies to the scalable functions f1..f13. f14..f23 have a fixed
/// dimension; a different request is ignored with a warning. Use
/// [`BenchmarkSpec::with_dimension`] for a strict override.
pub fn make_benchmark(name: &str, dimension: usize) -> Result<BenchmarkSpec, BenchmarkError> {
    let index = parse_index(name)?;
    let (function, modality) = FUNCTIONS[index - 1];
    let label = format!("f{index}");
    let spec = match fixed_dimension(function) {
        Some(fixed) => {
            if dimension != fixed {
                log::warn!("{label} has fixed dimension {fixed}; ignoring requested {dimension}");
            }
            BenchmarkSpec::build(label, function, modality, fixed)
        }
        None => {
            if dimension == 0 {
                return Err(BenchmarkError::ZeroDimension(label));
            }
            BenchmarkSpec::build(label, function, modality, dimension)
        }
    };
    Ok(spec)
}

/// True when `name` is one of f1..f13.
pub fn is_scalable(name: &str) -> bool {
    parse_index(name)
        .map(|i| fixed_dimension(FUNCTIONS[i - 1].0).is_none())
        .unwrap_or(false)
}

fn parse_index(name: &str) -> Result<usize, BenchmarkError> {
    let trimmed = name.trim();
    trimmed
        .strip_prefix('f')
        .or_else(|| trimmed.strip_prefix('F'))
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|i| (1..=23).contains(i))
        .ok_or_else(|| BenchmarkError::UnknownName(name.to_string()))
}

const FUNCTIONS: [(Function, Modality); 23] = [
    (Function::Sphere, Modality::Unimodal),
    (Function::Schwefel222, Modality::Unimodal),
    (Function::Schwefel12, Modality::Unimodal),
    (Function::Schwefel221, Modality::Unimodal),
    (Function::Rosenbrock, Modality::Unimodal),
    (Function::Step, Modality::Unimodal),
    (Function::QuarticNoise, Modality::Unimodal),
    (Function::Schwefel226, Modality::Multimodal),
    (Function::Rastrigin, Modality::Multimodal),
    (Function::Ackley, Modality::Multimodal),
    (Function::Griewank, Modality::Multimodal),
    (Function::Penalized1, Modality::Multimodal),
    (Function::Penalized2, Modality::Multimodal),
    (Function::Foxholes, Modality::MultimodalFixedDim),
    (Function::Kowalik, Modality::MultimodalFixedDim),
    (Function::SixHumpCamel, Modality::MultimodalFixedDim),
    (Function::Branin, Modality::MultimodalFixedDim),
    (Function::GoldsteinPrice, Modality::MultimodalFixedDim),
    (Function::Hartmann3, Modality::MultimodalFixedDim),
    (Function::Hartmann6, Modality::MultimodalFixedDim),
    (Function::Shekel5, Modality::MultimodalFixedDim),
    (Function::Shekel7, Modality::MultimodalFixedDim),
    (Function::Shekel10, Modality::MultimodalFixedDim),
];

fn fixed_dimension(function: Function) -> Option<usize> {
    use Function::*;
    match function {
        Foxholes | SixHumpCamel | Branin | GoldsteinPrice => Some(2),
        Hartmann3 => Some(3),
        Kowalik | Shekel5 | Shekel7 | Shekel10 => Some(4),
        Hartmann6 => Some(6),
        _ => None,
    }
}

/// Box of each function at dimension `n`.
fn domain(function: Function, n: usize) -> Bounds {
    use Function::*;
    let cube = |lo: f64, hi: f64| Bounds::uniform(lo, hi, n).expect("static bounds are valid");
    match function {
        Sphere | Schwefel12 | Schwefel221 | Step => cube(-100.0, 100.0),
        Schwefel222 => cube(-10.0, 10.0),
        Rosenbrock => cube(-30.0, 30.0),
        QuarticNoise => cube(-1.28, 1.28),
        Schwefel226 => cube(-500.0, 500.0),
        Rastrigin => cube(-5.12, 5.12),
        Ackley => cube(-32.0, 32.0),
        Griewank => cube(-600.0, 600.0),
        Penalized1 | Penalized2 => cube(-50.0, 50.0),
        Foxholes => cube(-65.0, 65.0),
        Kowalik | SixHumpCamel => cube(-5.0, 5.0),
        Branin => Bounds::new(vec![-5.0, 0.0], vec![10.0, 15.0]).expect("static bounds are valid"),
        GoldsteinPrice => cube(-2.0, 2.0),
        Hartmann3 | Hartmann6 => cube(0.0, 1.0),
        Shekel5 | Shekel7 | Shekel10 => cube(0.0, 10.0),
    }
}

/// (standard global minimum, value printed in the testbed table).
fn optimum(function: Function, n: usize) -> (f64, f64) {
    use Function::*;
    match function {
        Schwefel226 => (-418.982_887_272_433_8 * n as f64, -418.9829 * n as f64),
        Foxholes => (0.998_003_837_794_449, 0.998),
        Kowalik => (3.074_859_878_056e-4, 0.00030),
        SixHumpCamel => (-1.031_628_453_489_877, -1.0316),
        Branin => (0.397_887_357_729_738, 0.398),
        GoldsteinPrice => (3.0, 3.0),
        Hartmann3 => (-3.862_782_147_820_756, -3.86),
        Hartmann6 => (-3.322_368_011_415_515, -3.32),
        Shekel5 => (-10.153_199_679_058_23, -10.1532),
        Shekel7 => (-10.402_940_566_818_66, -10.4028),
        Shekel10 => (-10.536_409_816_692_05, -10.5363),
        _ => (0.0, 0.0),
    }
}

impl BenchmarkSpec {
    fn build(name: String, function: Function, modality: Modality, n: usize) -> Self {
        let (known_optimum, reported_optimum) = optimum(function, n);
        Self {
            name,
            function,
            bounds: domain(function, n),
            known_optimum,
            reported_optimum,
            modality,
        }
    }

    /// Same function at dimension `n`; fixed-dimension functions only accept
    /// their own dimension.
    pub fn with_dimension(&self, n: usize) -> Result<Self, BenchmarkError> {
        match fixed_dimension(self.function) {
            Some(fixed) if fixed != n => Err(BenchmarkError::FixedDimension {
                name: self.name.clone(),
                fixed,
                requested: n,
            }),
            _ if n == 0 => Err(BenchmarkError::ZeroDimension(self.name.clone())),
            _ => Ok(Self::build(
                self.name.clone(),
                self.function,
                self.modality,
                n,
            )),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Standard global minimum (full precision).
    pub fn known_optimum(&self) -> f64 {
        self.known_optimum
    }

    /// Optimum as printed in the testbed table (rounded).
    pub fn reported_optimum(&self) -> f64 {
        self.reported_optimum
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn is_scalable(&self) -> bool {
        fixed_dimension(self.function).is_none()
    }

    /// True only for f7, whose value includes a uniform `[0, 1)` draw.
    pub fn is_noisy(&self) -> bool {
        self.function == Function::QuarticNoise
    }

    /// Value without the f7 noise term; identical to [`Objective::evaluate`]
    /// for every other function.
    pub fn value_noise_free(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        Ok(raw_value(self.function, x))
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.dimension() {
            return Err(ObjectiveError::DimensionMismatch {
                name: self.name.clone(),
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl Objective for BenchmarkSpec {
    fn name(&self) -> &str {
        &self.name
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(self.known_optimum)
    }

    fn evaluate(&self, x: &[f64], noise: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        let mut value = raw_value(self.function, x);
        if self.is_noisy() {
            value += noise.gen::<f64>();
        }
        Ok(value)
    }
}

fn raw_value(function: Function, x: &[f64]) -> f64 {
    use Function::*;
    match function {
        Sphere => x.iter().map(|v| v * v).sum(),
        Schwefel222 => {
            x.iter().map(|v| v.abs()).sum::<f64>() + x.iter().map(|v| v.abs()).product::<f64>()
        }
        Schwefel12 => {
            let mut prefix = 0.0;
            x.iter()
                .map(|v| {
                    prefix += v;
                    prefix * prefix
                })
                .sum()
        }
        Schwefel221 => x.iter().fold(0.0, |m, v| f64::max(m, v.abs())),
        Rosenbrock => x
            .windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
            .sum(),
        Step => x.iter().map(|v| (v + 0.5).floor().powi(2)).sum(),
        QuarticNoise => x
            .iter()
            .enumerate()
            .map(|(i, v)| (i + 1) as f64 * v.powi(4))
            .sum(),
        Schwefel226 => x.iter().map(|v| -v * v.abs().sqrt().sin()).sum(),
        Rastrigin => x
            .iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
            .sum(),
        Ackley => {
            let n = x.len() as f64;
            let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
            let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
            -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
        }
        Griewank => {
            let sum = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
            let prod: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                .product();
            sum - prod + 1.0
        }
        Penalized1 => {
            let n = x.len();
            let y: Vec<f64> = x.iter().map(|v| 1.0 + (v + 1.0) / 4.0).collect();
            let mut inner = 10.0 * (PI * y[0]).sin().powi(2);
            for i in 0..n - 1 {
                inner += (y[i] - 1.0).powi(2) * (1.0 + 10.0 * (PI * y[i + 1]).sin().powi(2));
            }
            inner += (y[n - 1] - 1.0).powi(2);
            PI / n as f64 * inner + x.iter().map(|&v| penalty(v, 10.0, 100.0, 4)).sum::<f64>()
        }
        Penalized2 => {
            let n = x.len();
            let mut inner = (3.0 * PI * x[0]).sin().powi(2);
            for i in 0..n - 1 {
                inner += (x[i] - 1.0).powi(2) * (1.0 + (3.0 * PI * x[i + 1]).sin().powi(2));
            }
            inner += (x[n - 1] - 1.0).powi(2) * (1.0 + (2.0 * PI * x[n - 1]).sin().powi(2));
            0.1 * inner + x.iter().map(|&v| penalty(v, 5.0, 100.0, 4)).sum::<f64>()
        }
        Foxholes => {
            let s: f64 = (0..25)
                .map(|j| {
                    let (a0, a1) = foxhole(j);
                    1.0 / ((j + 1) as f64 + (x[0] - a0).powi(6) + (x[1] - a1).powi(6))
                })
                .sum();
            1.0 / (1.0 / 500.0 + s)
        }
        Kowalik => KOWALIK_A
            .iter()
            .zip(KOWALIK_B_INV.iter())
            .map(|(&a, &b_inv)| {
                let b = 1.0 / b_inv;
                let model = x[0] * (b * b + b * x[1]) / (b * b + b * x[2] + x[3]);
                (a - model).powi(2)
            })
            .sum(),
        SixHumpCamel => {
            let (x1, x2) = (x[0], x[1]);
            4.0 * x1 * x1 - 2.1 * x1.powi(4) + x1.powi(6) / 3.0 + x1 * x2 - 4.0 * x2 * x2
                + 4.0 * x2.powi(4)
        }
        Branin => {
            let (x1, x2) = (x[0], x[1]);
            let b = 5.1 / (4.0 * PI * PI);
            let c = 5.0 / PI;
            (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2)
                + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos()
                + 10.0
        }
        GoldsteinPrice => {
            let (x1, x2) = (x[0], x[1]);
            let a = 1.0
                + (x1 + x2 + 1.0).powi(2)
                    * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2
                        + 6.0 * x1 * x2
                        + 3.0 * x2 * x2);
            let b = 30.0
                + (2.0 * x1 - 3.0 * x2).powi(2)
                    * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2
                        + 27.0 * x2 * x2);
            a * b
        }
        Hartmann3 => hartmann(x, &HARTMANN_C, &HARTMANN3_A, &HARTMANN3_P),
        Hartmann6 => hartmann(x, &HARTMANN_C, &HARTMANN6_A, &HARTMANN6_P),
        Shekel5 => shekel(x, 5),
        Shekel7 => shekel(x, 7),
        Shekel10 => shekel(x, 10),
    }
}

/// Boundary penalty `u(x, a, k, m)` used by f12 and f13.
fn penalty(x: f64, a: f64, k: f64, m: i32) -> f64 {
    if x > a {
        k * (x - a).powi(m)
    } else if x < -a {
        k * (-x - a).powi(m)
    } else {
        0.0
    }
}

/// Column `j` of the 2x25 foxhole matrix.
fn foxhole(j: usize) -> (f64, f64) {
    const GRID: [f64; 5] = [-32.0, -16.0, 0.0, 16.0, 32.0];
    (GRID[j % 5], GRID[j / 5])
}

const KOWALIK_A: [f64; 11] = [
    0.1957, 0.1947, 0.1735, 0.1600, 0.0844, 0.0627, 0.0456, 0.0342, 0.0323, 0.0235, 0.0246,
];
// Stored as 1/b_i, the way the constants are usually tabulated.
const KOWALIK_B_INV: [f64; 11] = [0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0];

const HARTMANN_C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.038150, 0.5743, 0.8828],
];
const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann<const D: usize>(x: &[f64], c: &[f64; 4], a: &[[f64; D]; 4], p: &[[f64; D]; 4]) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..D).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
            c[i] * (-inner).exp()
        })
        .sum::<f64>()
}

const SHEKEL_A: [[f64; 4]; 10] = [
    [4.0, 4.0, 4.0, 4.0],
    [1.0, 1.0, 1.0, 1.0],
    [8.0, 8.0, 8.0, 8.0],
    [6.0, 6.0, 6.0, 6.0],
    [3.0, 7.0, 3.0, 7.0],
    [2.0, 9.0, 2.0, 9.0],
    [5.0, 5.0, 3.0, 3.0],
    [8.0, 1.0, 8.0, 1.0],
    [6.0, 2.0, 6.0, 2.0],
    [7.0, 3.6, 7.0, 3.6],
];
const SHEKEL_C: [f64; 10] = [0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5];

fn shekel(x: &[f64], m: usize) -> f64 {
    -(0..m)
        .map(|i| {
            let d: f64 = (0..4).map(|j| (x[j] - SHEKEL_A[i][j]).powi(2)).sum();
            1.0 / (d + SHEKEL_C[i])
        })
        .sum::<f64>()
}

/// A point where each function attains its minimum, and whether that point is
/// analytic (exact) or a stored numerical optimizer.
pub fn reference_optimizer(spec: &BenchmarkSpec) -> (Vec<f64>, bool) {
    use Function::*;
    let n = spec.dimension();
    match spec.function {
        Sphere | Schwefel222 | Schwefel12 | Schwefel221 | Step | QuarticNoise | Rastrigin
        | Ackley | Griewank => (vec![0.0; n], true),
        Rosenbrock | Penalized2 => (vec![1.0; n], true),
        Penalized1 => (vec![-1.0; n], true),
        Schwefel226 => (vec![420.968_746_359_982; n], false),
        Foxholes => (vec![-31.978_328_907_6, -31.978_328_915_6], false),
        Kowalik => (
            vec![
                0.192_833_452_3,
                0.190_836_238_8,
                0.123_117_266_4,
                0.135_765_994_5,
            ],
            false,
        ),
        SixHumpCamel => (vec![0.089_842_01, -0.712_656_4], false),
        Branin => (vec![PI, 2.275], false),
        GoldsteinPrice => (vec![0.0, -1.0], false),
        Hartmann3 => (vec![0.114_614, 0.555_649, 0.852_547], false),
        Hartmann6 => (
            vec![
                0.201_69, 0.150_011, 0.476_874, 0.275_332, 0.311_652, 0.657_3,
            ],
            false,
        ),
        Shekel5 => (vec![4.0; 4], false),
        Shekel7 => (
            vec![4.000_572_9, 4.000_689_3, 3.999_489_6, 3.999_606_0],
            false,
        ),
        Shekel10 => (
            vec![4.000_746_5, 4.000_592_9, 3.999_663_4, 3.999_509_8],
            false,
        ),
    }
}

/// Tolerance for analytic optimizers.
pub const ANALYTIC_TOLERANCE: f64 = 1e-12;
/// Tolerance for stored numerical optimizers.
pub const STORED_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumCheck {
    pub name: String,
    pub dimension: usize,
    pub modality: Modality,
    pub analytic: bool,
    /// Noise-free value at the reference optimizer.
    pub value: f64,
    pub known_optimum: f64,
    pub reported_optimum: f64,
    pub tolerance: f64,
    /// `|value - known_optimum| <= tolerance`.
    pub passed: bool,
}

impl OptimumCheck {
    pub fn error(&self) -> f64 {
        (self.value - self.known_optimum).abs()
    }

    /// Distance to the rounded value printed in the testbed table.
    pub fn reported_error(&self) -> f64 {
        (self.value - self.reported_optimum).abs()
    }
}

/// Evaluates every testbed function at its reference optimizer (scalable
/// functions at `n = 30`) and checks the value against the known minimum.
pub fn verify_optima() -> Vec<OptimumCheck> {
    TESTBED
        .iter()
        .map(|name| {
            let spec = make_benchmark(name, 30).expect("testbed names are valid");
            let (x, analytic) = reference_optimizer(&spec);
            let value = spec
                .value_noise_free(&x)
                .expect("optimizer has the right dimension");
            let tolerance = if analytic {
                ANALYTIC_TOLERANCE
            } else {
                STORED_TOLERANCE
            };
            OptimumCheck {
                name: spec.name.clone(),
                dimension: spec.dimension(),
                modality: spec.modality,
                analytic,
                value,
                known_optimum: spec.known_optimum,
                reported_optimum: spec.reported_optimum,
                tolerance,
                passed: (value - spec.known_optimum).abs() <= tolerance,
            }
        })
        .collect()
}

/// Counts calls to the wrapped objective.
pub struct EvaluationCounter<O> {
    inner: O,
    count: AtomicU64,
}

impl<O: Objective> EvaluationCounter<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Objective> Objective for EvaluationCounter<O> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn bounds(&self) -> &Bounds {
        self.inner.bounds()
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn known_optimum(&self) -> Option<f64> {
        self.inner.known_optimum()
    }

    fn evaluate(&self, x: &[f64], noise: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x, noise)
    }
}

/// A user-supplied in-process objective.
pub struct FnObjective<F> {
    name: String,
    bounds: Bounds,
    known_optimum: Option<f64>,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, bounds: Bounds, f: F) -> Self {
        Self {
            name: name.into(),
            bounds,
            known_optimum: None,
            f,
        }
    }

    pub fn with_known_optimum(mut self, optimum: f64) -> Self {
        self.known_optimum = Some(optimum);
        self
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn known_optimum(&self) -> Option<f64> {
        self.known_optimum
    }

    fn evaluate(&self, x: &[f64], _noise: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        if x.len() != self.bounds.dim() {
            return Err(ObjectiveError::DimensionMismatch {
                name: self.name.clone(),
                expected: self.bounds.dim(),
                got: x.len(),
            });
        }
        Ok((self.f)(x))
    }
}

struct ChildIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// An objective evaluated by a child process.
///
/// Protocol: for every evaluation one line of whitespace-separated coordinates
/// is written to the child's stdin, and one line holding the fitness value is
/// read back from its stdout. Calls are serialized.
pub struct ExternalObjective {
    name: String,
    bounds: Bounds,
    known_optimum: Option<f64>,
    io: Mutex<ChildIo>,
}

impl ExternalObjective {
    pub fn spawn(
        name: impl Into<String>,
        bounds: Bounds,
        mut command: Command,
    ) -> Result<Self, ObjectiveError> {
        let name = name.into();
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ObjectiveError::External {
                name: name.clone(),
                reason: format!("spawn failed: {e}"),
            })?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self {
            name,
            bounds,
            known_optimum: None,
            io: Mutex::new(ChildIo {
                child,
                stdin,
                stdout,
            }),
        })
    }

    pub fn with_known_optimum(mut self, optimum: f64) -> Self {
        self.known_optimum = Some(optimum);
        self
    }

    fn failure(&self, reason: impl Into<String>) -> ObjectiveError {
        ObjectiveError::External {
            name: self.name.clone(),
            reason: reason.into(),
        }
    }
}

impl Objective for ExternalObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn known_optimum(&self) -> Option<f64> {
        self.known_optimum
    }

    fn evaluate(&self, x: &[f64], _noise: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        if x.len() != self.bounds.dim() {
            return Err(ObjectiveError::DimensionMismatch {
                name: self.name.clone(),
                expected: self.bounds.dim(),
                got: x.len(),
            });
        }
        let mut io = self.io.lock().map_err(|_| self.failure("poisoned lock"))?;
        let line = x
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(io.stdin, "{line}")
            .and_then(|_| io.stdin.flush())
            .map_err(|e| self.failure(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let read = io
            .stdout
            .read_line(&mut reply)
            .map_err(|e| self.failure(format!("read failed: {e}")))?;
        if read == 0 {
            return Err(self.failure("child closed its output"));
        }
        reply
            .trim()
            .parse::<f64>()
            .map_err(|_| self.failure(format!("unparseable reply `{}`", reply.trim())))
    }
}

impl Drop for ExternalObjective {
    fn drop(&mut self) {
        if let Ok(io) = self.io.get_mut() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eval(name: &str, x: &[f64]) -> f64 {
        let spec = make_benchmark(name, x.len()).unwrap();
        spec.value_noise_free(x).unwrap()
    }

    #[test]
    fn sphere_examples() {
        let spec = make_benchmark("f1", 30).unwrap();
        assert_eq!(spec.dimension(), 30);
        assert_eq!(spec.bounds().lower()[0], -100.0);
        assert_eq!(spec.bounds().upper()[29], 100.0);
        assert_eq!(spec.known_optimum(), 0.0);
        assert_eq!(spec.modality(), Modality::Unimodal);
        assert_eq!(eval("f1", &[0.0; 30]), 0.0);
        assert_eq!(eval("f1", &[1.0; 30]), 30.0);
    }

    #[test]
    fn schwefel_226_optimum_scales_with_dimension() {
        let spec = make_benchmark("f8", 30).unwrap();
        assert!((spec.reported_optimum() - (-12569.487)).abs() < 1e-9);
        assert!((spec.known_optimum() - spec.reported_optimum()).abs() < 1e-3);
    }

    #[test]
    fn branin_is_fixed_two_dimensional() {
        let spec = make_benchmark("f17", 17).unwrap();
        assert_eq!(spec.dimension(), 2);
        assert_eq!(spec.reported_optimum(), 0.398);
        assert_eq!(spec.bounds().lower(), &[-5.0, 0.0]);
        assert_eq!(spec.bounds().upper(), &[10.0, 15.0]);
        assert!(matches!(
            spec.with_dimension(5),
            Err(BenchmarkError::FixedDimension { fixed: 2, .. })
        ));
        assert!(spec.with_dimension(2).is_ok());
    }

    #[test]
    fn step_rounds_per_coordinate() {
        assert_eq!(eval("f6", &[0.4; 30]), 0.0);
        assert_eq!(eval("f6", &[0.5; 4]), 4.0);
        assert_eq!(eval("f6", &[-0.6; 2]), 2.0);
    }

    #[test]
    fn rastrigin_values() {
        assert_eq!(eval("f9", &[0.0; 30]), 0.0);
        let mut x = vec![0.0; 30];
        x[0] = 1.0;
        assert!((eval("f9", &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn six_hump_camel_near_reported_value() {
        let v = eval("f16", &[0.089_842_01, -0.712_656_4]);
        assert!((v - (-1.0316)).abs() < 1e-4);
    }

    #[test]
    fn shekel_5_at_centre() {
        let v = eval("f21", &[4.0; 4]);
        assert!((v - (-10.1532)).abs() < 1e-3);
    }

    #[test]
    fn penalty_function_branches() {
        assert_eq!(penalty(3.0, 5.0, 100.0, 4), 0.0);
        assert_eq!(penalty(7.0, 5.0, 100.0, 4), 100.0 * 16.0);
        assert_eq!(penalty(-7.0, 5.0, 100.0, 4), 100.0 * 16.0);
        // Outside [-10, 10] the f12 penalty dominates.
        assert!(eval("f12", &[50.0; 3]) > 1e6);
    }

    #[test]
    fn rosenbrock_and_schwefel_12_by_hand() {
        // 100 (1 - 0)^2 + (0 - 1)^2 = 101
        assert_eq!(eval("f5", &[0.0, 1.0]), 101.0);
        // (1)^2 + (1 + 2)^2 + (1 + 2 + 3)^2 = 46
        assert_eq!(eval("f3", &[1.0, 2.0, 3.0]), 46.0);
        assert_eq!(eval("f4", &[1.0, -7.0, 3.0]), 7.0);
        // |1| + |-2| + |1 * -2| = 5
        assert_eq!(eval("f2", &[1.0, -2.0]), 5.0);
    }

    #[test]
    fn quartic_noise_uses_the_supplied_stream() {
        let spec = make_benchmark("f7", 3).unwrap();
        assert!(spec.is_noisy());
        let x = [0.5, -0.5, 1.0];
        let base = spec.value_noise_free(&x).unwrap();
        assert_eq!(base, 0.0625 + 2.0 * 0.0625 + 3.0);
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let va = spec.evaluate(&x, &mut a).unwrap();
        let vb = spec.evaluate(&x, &mut b).unwrap();
        assert_eq!(va, vb);
        assert!(va >= base && va < base + 1.0);
    }

    #[test]
    fn names_and_dimensions() {
        assert!(matches!(
            make_benchmark("f24", 2),
            Err(BenchmarkError::UnknownName(_))
        ));
        assert!(matches!(
            make_benchmark("sphere", 2),
            Err(BenchmarkError::UnknownName(_))
        ));
        assert!(matches!(
            make_benchmark("f3", 0),
            Err(BenchmarkError::ZeroDimension(_))
        ));
        assert!(make_benchmark("F3", 4).is_ok());
        assert!(is_scalable("f13"));
        assert!(!is_scalable("f14"));
        assert!(!is_scalable("nope"));
    }

    #[test]
    fn modality_classes_match_table() {
        for (i, name) in TESTBED.iter().enumerate() {
            let spec = make_benchmark(name, 5).unwrap();
            let expected = match i + 1 {
                1..=7 => Modality::Unimodal,
                8..=13 => Modality::Multimodal,
                _ => Modality::MultimodalFixedDim,
            };
            assert_eq!(spec.modality(), expected, "{name}");
            assert_eq!(spec.is_scalable(), i < 13, "{name}");
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = make_benchmark("f1", 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            spec.evaluate(&[1.0], &mut rng),
            Err(ObjectiveError::DimensionMismatch {
                expected: 3,
                got: 1,
                ..
            })
        ));
    }

    #[test]
    fn every_reference_optimizer_checks_out() {
        let report = verify_optima();
        assert_eq!(report.len(), 23);
        for check in &report {
            assert!(check.passed, "{check:?}");
        }
    }

    #[test]
    fn counter_counts() {
        let spec = make_benchmark("f1", 2).unwrap();
        let counter = EvaluationCounter::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..7 {
            counter.evaluate(&[1.0, 2.0], &mut rng).unwrap();
        }
        assert_eq!(counter.count(), 7);
    }

    #[test]
    fn fn_objective_plugs_in() {
        let obj = FnObjective::new("shifted", Bounds::uniform(-1.0, 1.0, 2).unwrap(), |x| {
            (x[0] - 0.5).powi(2) + x[1].abs()
        })
        .with_known_optimum(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(obj.evaluate(&[0.5, 0.0], &mut rng).unwrap(), 0.0);
        assert_eq!(obj.known_optimum(), Some(0.0));
        assert!(obj.evaluate(&[0.5], &mut rng).is_err());
    }

    // mawk block-buffers piped input unless told to run interactively.
    fn line_awk() -> Command {
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(
            "if awk -W interactive 'BEGIN {}' </dev/null >/dev/null 2>&1; \
             then exec awk -W interactive \"$0\"; else exec awk \"$0\"; fi",
        );
        cmd
    }

    #[test]
    fn external_objective_round_trip() {
        let mut cmd = line_awk();
        cmd.arg(
            "{ s = 0; for (i = 1; i <= NF; i++) s += $i * $i; printf \"%.17g\\n\", s; fflush() }",
        );
        let obj =
            ExternalObjective::spawn("ext-sphere", Bounds::uniform(-5.0, 5.0, 3).unwrap(), cmd)
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(obj.evaluate(&[1.0, 2.0, 3.0], &mut rng).unwrap(), 14.0);
        assert_eq!(obj.evaluate(&[0.5, 0.0, 0.0], &mut rng).unwrap(), 0.25);
        assert!(obj.evaluate(&[1.0], &mut rng).is_err());
    }

    #[test]
    fn external_objective_reports_garbage() {
        let mut cmd = line_awk();
        cmd.arg("{ print \"not-a-number\"; fflush() }");
        let obj = ExternalObjective::spawn("garbage", Bounds::uniform(0.0, 1.0, 1).unwrap(), cmd)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            obj.evaluate(&[0.5], &mut rng),
            Err(ObjectiveError::External { .. })
        ));
    }

    proptest! {
        #[test]
        fn even_functions_are_symmetric(x in prop::collection::vec(-5.0f64..5.0, 1..20)) {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            for name in ["f1", "f9", "f10", "f11"] {
                let a = eval(name, &x);
                let b = eval(name, &neg);
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} {} {}", name, a, b);
            }
        }

        #[test]
        fn values_are_finite_inside_bounds(idx in 0usize..23, seed in any::<u64>()) {
            let spec = make_benchmark(TESTBED[idx], 10).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = spec.bounds().lower().iter().zip(spec.bounds().upper())
                .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
                .collect();
            prop_assert!(spec.evaluate(&x, &mut rng).unwrap().is_finite());
        }
    }
}
