//! Gravitational Search Algorithm (GSA) and its chaos-embedded
//! opposition-based-learning variant (COGSA).
//!
//! The crate is organized bottom-up:
//!
//! - [`chaos`]: logistic-map sequences and the sine-cosine chaotic exponent.
//! - [`obl`]: search boxes and opposition operators.
//! - [`benchmark`]: the 23 classical test functions and plug-in objectives.
//! - [`engine`]: the GSA/COGSA iteration loop.
//! - [`harness`]: seeded multi-run batches, sweeps, summaries and file formats.
//! - [`stats`]: Friedman test and Bonferroni post-hoc comparison.
//!
//! ```
//! use cogsa_core::{benchmark::make_benchmark, engine::{run, EngineConfig}};
//!
//! let sphere = make_benchmark("f1", 5).unwrap();
//! let record = run(&sphere, &EngineConfig::cogsa(20, 200), 7).unwrap();
//! assert!(record.final_best_fitness < 1e-6);
//! ```

pub mod benchmark;
pub mod chaos;
pub mod engine;
pub mod harness;
pub mod obl;
pub mod stats;

pub use benchmark::{make_benchmark, BenchmarkSpec, EvaluationCounter, Modality, Objective};
pub use chaos::{ChaoticAlphaConfig, ChaoticSequence};
pub use engine::{AlphaMode, EngineConfig, EngineError, RandomDraws};
pub use harness::{ExperimentReport, RunRecord};
pub use obl::Bounds;
pub use stats::PairedResults;
