//! The gravitational search loop.
//!
//! One iteration `t` (1-based, `1..=T`) does, in order: evaluate every agent,
//! assign masses from fitness, pick the exponent (fixed or chaotic), compute
//! `G(t) = G0 * exp(-alpha * t / T)`, accumulate accelerations from the `K(t)`
//! best agents, move every agent, and finally (COGSA only) oppose one random
//! agent with the chaotic opposite and keep whichever of the two is fitter.
//!
//! Every random draw comes from one ChaCha stream seeded by the run seed, in a
//! fixed order, so `(config, seed)` fully determines a run.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::benchmark::{Objective, ObjectiveError};
use crate::chaos::{chaotic_alpha, ChaosError, ChaoticAlphaConfig, ChaoticSequence};
use crate::harness::RunRecord;
use crate::obl::{apply_obl_step, Bounds, OblError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("objective `{name}` has dimension {got}, configuration expects {expected}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error(
        "objective returned non-finite fitness {value} for agent {agent} at iteration {iteration}"
    )]
    NonFiniteFitness {
        iteration: usize,
        agent: usize,
        value: f64,
    },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Chaos(#[from] ChaosError),
    #[error(transparent)]
    Obl(#[from] OblError),
}

/// One candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Fitness at the last evaluation; stale after a move until re-evaluated.
    pub fitness: f64,
    /// Normalized mass in `[0, 1]`.
    pub mass: f64,
}

impl Agent {
    /// Agent at `position` with zero velocity and no evaluation yet.
    pub fn new(position: Vec<f64>) -> Self {
        let n = position.len();
        Self {
            position,
            velocity: vec![0.0; n],
            fitness: f64::INFINITY,
            mass: 0.0,
        }
    }
}

/// Population snapshot at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub agents: Vec<Agent>,
    pub iteration: usize,
    pub best_fitness: f64,
    pub worst_fitness: f64,
    pub kbest_size: usize,
    pub gravitational_constant: f64,
}

impl SwarmState {
    pub fn new(agents: Vec<Agent>) -> Self {
        let k = agents.len();
        Self {
            agents,
            iteration: 0,
            best_fitness: f64::INFINITY,
            worst_fitness: f64::NEG_INFINITY,
            kbest_size: k,
            gravitational_constant: 0.0,
        }
    }

    /// Refreshes best/worst fitness and masses from the agents' fitness.
    pub fn update_masses(&mut self) -> Result<(), EngineError> {
        let fitness: Vec<f64> = self.agents.iter().map(|a| a.fitness).collect();
        let masses = compute_masses(&fitness)?;
        for (agent, m) in self.agents.iter_mut().zip(masses) {
            agent.mass = m;
        }
        self.best_fitness = fitness.iter().copied().fold(f64::INFINITY, f64::min);
        self.worst_fitness = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(())
    }
}

/// Granularity of the uniform factors in the acceleration and velocity updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RandomDraws {
    /// One draw per `(i, j)` pair and one per agent, shared by all dimensions.
    #[default]
    Shared,
    /// A fresh draw for every coordinate, as in the original MATLAB GSA.
    PerDimension,
}

/// How the exponent of the gravitational constant is chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    Fixed(f64),
    Chaotic(ChaoticAlphaConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub g0: f64,
    pub alpha_mode: AlphaMode,
    /// Added to inter-agent distances before dividing.
    pub epsilon: f64,
    /// Final size of the force-exerting set, as a fraction of the population.
    pub kbest_final_fraction: f64,
    pub obl_enabled: bool,
    /// Total iterations `T`.
    pub iterations: usize,
    /// Population size `N`.
    pub population: usize,
    /// First value of the logistic sequence.
    pub chaos_seed_value: f64,
    pub random_draws: RandomDraws,
}

pub const DEFAULT_G0: f64 = 100.0;
pub const DEFAULT_ALPHA: f64 = 20.0;
pub const DEFAULT_EPSILON: f64 = 1e-100;
pub const DEFAULT_KBEST_FINAL_FRACTION: f64 = 0.02;

impl EngineConfig {
    /// Basic GSA: `G0 = 100`, fixed `alpha = 20`, no opposition.
    pub fn gsa(population: usize, iterations: usize) -> Self {
        Self {
            g0: DEFAULT_G0,
            alpha_mode: AlphaMode::Fixed(DEFAULT_ALPHA),
            epsilon: DEFAULT_EPSILON,
            kbest_final_fraction: DEFAULT_KBEST_FINAL_FRACTION,
            obl_enabled: false,
            iterations,
            population,
            chaos_seed_value: crate::chaos::DEFAULT_SEED_VALUE,
            random_draws: RandomDraws::Shared,
        }
    }

    /// COGSA: `G0 = 100`, chaotic exponent (A = 2, B = 25) and chaotic opposition.
    pub fn cogsa(population: usize, iterations: usize) -> Self {
        Self {
            alpha_mode: AlphaMode::Chaotic(ChaoticAlphaConfig::new(iterations)),
            obl_enabled: true,
            ..Self::gsa(population, iterations)
        }
    }

    /// Changes `T`, keeping a chaotic exponent's horizon in sync.
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        if let AlphaMode::Chaotic(ref mut c) = self.alpha_mode {
            c.total_iterations = iterations;
        }
        self
    }

    /// Short identifier: `gsa`, `cogsa`, or a description of a hybrid setting.
    pub fn algorithm_label(&self) -> &'static str {
        match (self.obl_enabled, &self.alpha_mode) {
            (false, AlphaMode::Fixed(_)) => "gsa",
            (true, AlphaMode::Chaotic(_)) => "cogsa",
            (true, AlphaMode::Fixed(_)) => "gsa-obl",
            (false, AlphaMode::Chaotic(_)) => "gsa-chaotic-g",
        }
    }

    fn uses_chaos(&self) -> bool {
        self.obl_enabled || matches!(self.alpha_mode, AlphaMode::Chaotic(_))
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: &str| Err(EngineError::InvalidConfig(msg.to_string()));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(self.g0.is_finite() && self.g0 > 0.0) {
            return bad("G0 must be finite and > 0");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be finite and > 0");
        }
        if !(self.kbest_final_fraction > 0.0 && self.kbest_final_fraction <= 1.0) {
            return bad("kbest final fraction must lie in (0, 1]");
        }
        if !(self.chaos_seed_value > 0.0 && self.chaos_seed_value < 1.0) {
            return bad("chaos seed value must lie in (0, 1)");
        }
        match &self.alpha_mode {
            AlphaMode::Fixed(a) if !(a.is_finite() && *a > 0.0) => {
                return bad("fixed alpha must be finite and > 0")
            }
            AlphaMode::Chaotic(c) => {
                c.validate()?;
                if c.total_iterations != self.iterations {
                    return Err(EngineError::InvalidConfig(format!(
                        "chaotic alpha horizon {} differs from iterations {}",
                        c.total_iterations, self.iterations
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Normalized masses from fitness (minimization).
///
/// `q_i = (fit_i - worst) / (best - worst)`, `M_i = q_i / sum q`. A flat swarm
/// (`best == worst`) gets uniform masses `1/N`.
pub fn compute_masses(fitnesses: &[f64]) -> Result<Vec<f64>, EngineError> {
    if let Some((agent, &value)) = fitnesses.iter().enumerate().find(|(_, f)| !f.is_finite()) {
        return Err(EngineError::NonFiniteFitness {
            iteration: 0,
            agent,
            value,
        });
    }
    let n = fitnesses.len();
    let best = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best == worst {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let q: Vec<f64> = fitnesses
        .iter()
        .map(|&f| (f - worst) / (best - worst))
        .collect();
    let total: f64 = q.iter().sum();
    Ok(q.into_iter().map(|v| v / total).collect())
}

/// Size of the force-exerting set at iteration `t`: linear from `N` down to
/// `max(1, round(N * p))`.
pub fn kbest_size(t: usize, cfg: &EngineConfig) -> usize {
    let n = cfg.population as f64;
    let p = cfg.kbest_final_fraction;
    let remaining = 1.0 - t as f64 / cfg.iterations as f64;
    let k = (n * (p + remaining * (1.0 - p))).round() as usize;
    k.clamp(1, cfg.population)
}

/// `G(t) = G0 * exp(-alpha * t / T)`.
pub fn gravitational_constant(t: usize, alpha: f64, cfg: &EngineConfig) -> f64 {
    cfg.g0 * (-alpha * t as f64 / cfg.iterations as f64).exp()
}

/// Indices of the `k` fittest agents, ties broken by index.
pub fn kbest_indices(agents: &[Agent], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by(|&a, &b| agents[a].fitness.total_cmp(&agents[b].fitness));
    order.truncate(k);
    order
}

/// Accelerations (`N x n`) under the current masses, `K` and `G`.
///
/// `a_i = sum_{j in Kbest, j != i} rand_j * G * M_j / (R_ij + eps) * (x_j - x_i)`,
/// with one uniform draw per `(i, j)` pair shared by all dimensions
/// ([`RandomDraws::Shared`]) or one per coordinate.
pub fn compute_accelerations(
    state: &SwarmState,
    epsilon: f64,
    draws: RandomDraws,
    rng: &mut dyn RngCore,
) -> Vec<Vec<f64>> {
    let kbest = kbest_indices(&state.agents, state.kbest_size);
    let g = state.gravitational_constant;
    state
        .agents
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            let mut acc = vec![0.0; agent.position.len()];
            for &j in &kbest {
                if j == i {
                    continue;
                }
                let other = &state.agents[j];
                let shared: f64 = match draws {
                    RandomDraws::Shared => rng.gen(),
                    RandomDraws::PerDimension => 1.0,
                };
                let dist = agent
                    .position
                    .iter()
                    .zip(&other.position)
                    .map(|(a, b)| (b - a) * (b - a))
                    .sum::<f64>()
                    .sqrt();
                let coef = shared * g * other.mass / (dist + epsilon);
                for ((a, &xi), &xj) in acc.iter_mut().zip(&agent.position).zip(&other.position) {
                    let r: f64 = match draws {
                        RandomDraws::Shared => 1.0,
                        RandomDraws::PerDimension => rng.gen(),
                    };
                    *a += r * coef * (xj - xi);
                }
            }
            acc
        })
        .collect()
}

/// `v <- rand_i * v + a`, `x <- x + v`, then clamp into `bounds`, zeroing the
/// velocity of every clamped coordinate. One draw per agent, or one per
/// coordinate with [`RandomDraws::PerDimension`].
#[allow(clippy::needless_range_loop)]
pub fn step_velocity_position(
    state: &mut SwarmState,
    accel: &[Vec<f64>],
    bounds: &Bounds,
    draws: RandomDraws,
    rng: &mut dyn RngCore,
) {
    assert_eq!(accel.len(), state.agents.len(), "acceleration rows");
    for (agent, acc) in state.agents.iter_mut().zip(accel) {
        let shared: f64 = match draws {
            RandomDraws::Shared => rng.gen(),
            RandomDraws::PerDimension => 0.0,
        };
        for d in 0..agent.position.len() {
            let r = match draws {
                RandomDraws::Shared => shared,
                RandomDraws::PerDimension => rng.gen(),
            };
            let v = r * agent.velocity[d] + acc[d];
            let x = agent.position[d] + v;
            let (lo, hi) = (bounds.lower()[d], bounds.upper()[d]);
            if x < lo || x > hi {
                agent.position[d] = x.clamp(lo, hi);
                agent.velocity[d] = 0.0;
            } else {
                agent.position[d] = x;
                agent.velocity[d] = v;
            }
        }
    }
}

/// Runs GSA or COGSA (per `cfg`) on `objective` with the given seed.
pub fn run<O: Objective + ?Sized>(
    objective: &O,
    cfg: &EngineConfig,
    seed: u64,
) -> Result<RunRecord, EngineError> {
    run_observed(objective, cfg, seed, |_| {})
}

/// [`run`], calling `observe` with the swarm after masses are assigned in
/// every iteration (before any movement).
pub fn run_observed<O, F>(
    objective: &O,
    cfg: &EngineConfig,
    seed: u64,
    mut observe: F,
) -> Result<RunRecord, EngineError>
where
    O: Objective + ?Sized,
    F: FnMut(&SwarmState),
{
    cfg.validate()?;
    let started = Instant::now();
    let bounds = objective.bounds().clone();
    let dim = bounds.dim();
    if objective.dimension() != dim {
        return Err(EngineError::DimensionMismatch {
            name: objective.name().to_string(),
            expected: dim,
            got: objective.dimension(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = cfg.iterations;

    let agents = (0..cfg.population)
        .map(|_| {
            let position = bounds
                .lower()
                .iter()
                .zip(bounds.upper())
                .map(|(&lo, &hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect();
            Agent::new(position)
        })
        .collect();
    let mut state = SwarmState::new(agents);
    let chaos = if cfg.uses_chaos() {
        Some(ChaoticSequence::logistic(
            crate::chaos::DEFAULT_LOGISTIC_A,
            cfg.chaos_seed_value,
            total,
        )?)
    } else {
        None
    };

    let mut evaluations = 0u64;
    let mut best_fitness = f64::INFINITY;
    let mut best_position = state.agents[0].position.clone();
    let mut trace = Vec::with_capacity(total);

    for t in 1..=total {
        state.iteration = t;
        for (i, agent) in state.agents.iter_mut().enumerate() {
            let f = objective.evaluate(&agent.position, &mut rng)?;
            evaluations += 1;
            if !f.is_finite() {
                return Err(EngineError::NonFiniteFitness {
                    iteration: t,
                    agent: i,
                    value: f,
                });
            }
            agent.fitness = f;
            if f < best_fitness {
                best_fitness = f;
                best_position.clone_from(&agent.position);
            }
        }
        state.update_masses()?;

        let alpha = match &cfg.alpha_mode {
            AlphaMode::Fixed(a) => *a,
            AlphaMode::Chaotic(c) => {
                let cs = chaos.as_ref().expect("chaos precomputed");
                let coin: f64 = rng.gen();
                chaotic_alpha(c, cs.at(t), t, coin)
            }
        };
        state.gravitational_constant = gravitational_constant(t, alpha, cfg);
        state.kbest_size = kbest_size(t, cfg);
        observe(&state);

        let accel = compute_accelerations(&state, cfg.epsilon, cfg.random_draws, &mut rng);
        step_velocity_position(&mut state, &accel, &bounds, cfg.random_draws, &mut rng);

        if cfg.obl_enabled {
            let cs = chaos.as_ref().expect("chaos precomputed");
            let step = apply_obl_step(&mut state.agents, &bounds, cs.at(t), &mut rng, objective)?;
            evaluations += step.evaluations;
            if !step.candidate_fitness.is_finite() {
                return Err(EngineError::NonFiniteFitness {
                    iteration: t,
                    agent: step.index,
                    value: step.candidate_fitness,
                });
            }
            if step.replaced && step.candidate_fitness < best_fitness {
                best_fitness = step.candidate_fitness;
                best_position.clone_from(&state.agents[step.index].position);
            }
        }
        trace.push(best_fitness);
    }

    Ok(RunRecord {
        algorithm: cfg.algorithm_label().to_string(),
        benchmark: objective.name().to_string(),
        dimension: dim,
        seed,
        best_trace: trace,
        final_best_fitness: best_fitness,
        final_best_position: best_position,
        evaluations,
        wall_time: started.elapsed(),
    })
}
