//! Opposition-based learning: the classical opposite point and the chaotic
//! (scaled) opposite, plus the single-agent greedy opposition step.

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::benchmark::{Objective, ObjectiveError};
use crate::engine::Agent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("lower and upper bounds have different lengths ({lower} vs {upper})")]
    LengthMismatch { lower: usize, upper: usize },
    #[error("bounds must have at least one dimension")]
    Empty,
    #[error("dimension {dim}: lower bound {lower} is not strictly below upper bound {upper}")]
    Inverted { dim: usize, lower: f64, upper: f64 },
    #[error("dimension {0}: bound is not finite")]
    NonFinite(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OblError {
    #[error("point has {got} coordinates, bounds have {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("chaotic value {0} must lie strictly inside (0, 1)")]
    ChaoticValueOutOfRange(f64),
    #[error("cannot apply opposition to an empty swarm")]
    EmptySwarm,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, BoundsError> {
        if lower.len() != upper.len() {
            return Err(BoundsError::LengthMismatch {
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(BoundsError::Empty);
        }
        for (dim, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(BoundsError::NonFinite(dim));
            }
            if lo >= hi {
                return Err(BoundsError::Inverted {
                    dim,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The hypercube `[lower, upper]^dim`.
    pub fn uniform(lower: f64, upper: f64, dim: usize) -> Result<Self, BoundsError> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    pub fn clamp_in_place(&self, x: &mut [f64]) {
        for (v, (&lo, &hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(lo, hi);
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), OblError> {
        if x.len() != self.dim() {
            return Err(OblError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// `y_j = lb_j + ub_j - x_j`.
pub fn classical_opposite(x: &[f64], bounds: &Bounds) -> Result<Vec<f64>, OblError> {
    bounds.check_dim(x)?;
    Ok(x.iter()
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|(&v, (&lo, &hi))| lo + hi - v)
        .collect())
}

/// `y_j = cs_t * (lb_j + ub_j - x_j)`, clamped into the box.
///
/// The scaled point leaves the box whenever the bounds are not symmetric about
/// the origin (e.g. `[0, 1]`), so the clamp is part of the contract.
pub fn chaotic_opposite(x: &[f64], bounds: &Bounds, cs_t: f64) -> Result<Vec<f64>, OblError> {
    bounds.check_dim(x)?;
    if !(cs_t > 0.0 && cs_t < 1.0) {
        return Err(OblError::ChaoticValueOutOfRange(cs_t));
    }
    let mut y: Vec<f64> = x
        .iter()
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|(&v, (&lo, &hi))| cs_t * (lo + hi - v))
        .collect();
    bounds.clamp_in_place(&mut y);
    Ok(y)
}

/// What a single opposition step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OblStep {
    /// Index of the agent that was opposed.
    pub index: usize,
    /// Fitness of the opposite point.
    pub candidate_fitness: f64,
    /// Whether the opposite replaced the agent.
    pub replaced: bool,
    pub evaluations: u64,
}

/// Opposes one uniformly chosen agent and keeps the opposite iff it is strictly
/// better than the agent's recorded fitness.
///
/// Only the chosen agent's position and fitness can change; its velocity is
/// kept. `noise` is handed to the objective (only noisy objectives draw from it).
pub fn apply_obl_step<O: Objective + ?Sized>(
    agents: &mut [Agent],
    bounds: &Bounds,
    cs_t: f64,
    rng: &mut dyn RngCore,
    objective: &O,
) -> Result<OblStep, OblError> {
    if agents.is_empty() {
        return Err(OblError::EmptySwarm);
    }
    let index = rng.gen_range(0..agents.len());
    let candidate = chaotic_opposite(&agents[index].position, bounds, cs_t)?;
    let candidate_fitness = objective.evaluate(&candidate, rng)?;
    let agent = &mut agents[index];
    let replaced = candidate_fitness < agent.fitness;
    if replaced {
        agent.position = candidate;
        agent.fitness = candidate_fitness;
    }
    Ok(OblStep {
        index,
        candidate_fitness,
        replaced,
        evaluations: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{make_benchmark, EvaluationCounter};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sym(dim: usize) -> Bounds {
        Bounds::uniform(-100.0, 100.0, dim).unwrap()
    }

    #[test]
    fn bounds_validation() {
        assert!(matches!(
            Bounds::new(vec![0.0], vec![1.0, 2.0]),
            Err(BoundsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            Bounds::new(vec![1.0], vec![1.0]),
            Err(BoundsError::Inverted { .. })
        ));
        assert!(matches!(
            Bounds::new(vec![f64::NEG_INFINITY], vec![1.0]),
            Err(BoundsError::NonFinite(0))
        ));
        assert_eq!(Bounds::new(vec![], vec![]), Err(BoundsError::Empty));
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_opposite(&[30.0], &sym(1)).unwrap(), vec![-30.0]);
        let b = Bounds::new(vec![0.0, -5.0], vec![10.0, 3.0]).unwrap();
        assert_eq!(
            classical_opposite(&[0.0, -5.0], &b).unwrap(),
            vec![10.0, 3.0]
        );
        let b = Bounds::uniform(0.0, 10.0, 1).unwrap();
        assert_eq!(classical_opposite(&[2.0], &b).unwrap(), vec![8.0]);
        assert!(matches!(
            classical_opposite(&[1.0, 2.0], &b),
            Err(OblError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn chaotic_examples() {
        assert_eq!(
            chaotic_opposite(&[30.0], &sym(1), 0.5).unwrap(),
            vec![-15.0]
        );
        let b = Bounds::uniform(1.0, 10.0, 1).unwrap();
        // raw 0.05 * (1 + 10 - 2) = 0.45, below the lower bound
        assert_eq!(chaotic_opposite(&[2.0], &b, 0.05).unwrap(), vec![1.0]);
        assert!(matches!(
            chaotic_opposite(&[2.0], &b, 1.0),
            Err(OblError::ChaoticValueOutOfRange(_))
        ));
        assert!(matches!(
            chaotic_opposite(&[2.0], &b, 0.0),
            Err(OblError::ChaoticValueOutOfRange(_))
        ));
    }

    #[test]
    fn chaotic_approaches_classical_on_symmetric_box() {
        let x = [12.5, -40.0, 99.0];
        let c = classical_opposite(&x, &sym(3)).unwrap();
        let y = chaotic_opposite(&x, &sym(3), 1.0 - 1e-12).unwrap();
        for (a, b) in c.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    fn swarm(positions: &[Vec<f64>], f: &dyn Fn(&[f64]) -> f64) -> Vec<Agent> {
        positions
            .iter()
            .map(|p| {
                let mut a = Agent::new(p.clone());
                a.fitness = f(p);
                a
            })
            .collect()
    }

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn sphere_opposite_is_accepted() {
        let spec = make_benchmark("f1", 2).unwrap();
        let counter = EvaluationCounter::new(&spec);
        let mut agents = swarm(&[vec![80.0, -60.0]], &sphere);
        agents[0].velocity = vec![1.5, -2.5];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let step = apply_obl_step(&mut agents, spec.bounds(), 0.5, &mut rng, &counter).unwrap();
        assert_eq!(step.index, 0);
        assert!(step.replaced);
        // fitness(-0.5 x) = 0.25 * fitness(-x)
        assert_eq!(step.candidate_fitness, 0.25 * sphere(&[-80.0, 60.0]));
        assert_eq!(agents[0].position, vec![-40.0, 30.0]);
        assert_eq!(agents[0].velocity, vec![1.5, -2.5]);
        assert_eq!(counter.count(), 1);
    }

    #[test]
    fn worse_opposite_keeps_incumbent() {
        let spec = make_benchmark("f1", 1).unwrap();
        let counter = EvaluationCounter::new(&spec);
        // Incumbent fitness was recorded before the agent moved away.
        let mut agents = swarm(&[vec![1.0], vec![2.0]], &sphere);
        agents[0].position = vec![90.0];
        agents[1].position = vec![90.0];
        let before = agents.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let step = apply_obl_step(&mut agents, spec.bounds(), 0.9, &mut rng, &counter).unwrap();
        assert!(!step.replaced);
        assert_eq!(step.evaluations, 1);
        assert_eq!(counter.count(), 1);
        assert_eq!(agents, before);
    }

    #[test]
    fn empty_swarm_is_an_error() {
        let spec = make_benchmark("f1", 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            apply_obl_step(&mut [], spec.bounds(), 0.5, &mut rng, &spec),
            Err(OblError::EmptySwarm)
        );
    }

    fn box_and_point() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..8).prop_flat_map(|dim| {
            (
                prop::collection::vec((-1e3f64..1e3, 1e-3f64..1e3), dim),
                prop::collection::vec(0.0f64..=1.0, dim),
            )
                .prop_map(|(lo_w, fr)| {
                    let lower: Vec<f64> = lo_w.iter().map(|&(l, _)| l).collect();
                    let upper: Vec<f64> = lo_w.iter().map(|&(l, w)| l + w).collect();
                    let x = lower
                        .iter()
                        .zip(&upper)
                        .zip(&fr)
                        .map(|((&l, &u), &f)| (l + f * (u - l)).clamp(l, u))
                        .collect();
                    (lower, upper, x)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn chaotic_opposite_stays_feasible((lower, upper, x) in box_and_point(), cs in 1e-9f64..(1.0 - 1e-9)) {
            let b = Bounds::new(lower, upper).unwrap();
            let y = chaotic_opposite(&x, &b, cs).unwrap();
            prop_assert!(b.contains(&y));
        }

        #[test]
        fn classical_opposite_is_an_involution(x in prop::collection::vec(-100.0f64..100.0, 1..10)) {
            // Symmetric box: lb + ub = 0, so both reflections are exact negations.
            let b = sym(x.len());
            let y = classical_opposite(&x, &b).unwrap();
            prop_assert!(b.contains(&y));
            prop_assert_eq!(classical_opposite(&y, &b).unwrap(), x);
        }

        #[test]
        fn obl_step_touches_one_agent(
            seed in any::<u64>(),
            n in 1usize..12,
            dim in 1usize..6,
            cs in 0.01f64..0.99,
        ) {
            let spec = make_benchmark("f1", dim).unwrap();
            let counter = EvaluationCounter::new(&spec);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let positions: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.gen_range(-100.0..100.0)).collect())
                .collect();
            let mut agents = swarm(&positions, &sphere);
            let before = agents.clone();
            let best_before = before.iter().map(|a| a.fitness).fold(f64::INFINITY, f64::min);
            let step = apply_obl_step(&mut agents, spec.bounds(), cs, &mut rng, &counter).unwrap();
            prop_assert_eq!(counter.count(), 1);
            let changed: Vec<usize> = (0..n).filter(|&i| agents[i] != before[i]).collect();
            prop_assert!(changed.len() <= 1);
            if let Some(&i) = changed.first() {
                prop_assert_eq!(i, step.index);
                prop_assert!(step.replaced);
                prop_assert_eq!(&agents[i].velocity, &before[i].velocity);
            }
            let best_after = agents.iter().map(|a| a.fitness).fold(f64::INFINITY, f64::min);
            prop_assert!(best_after <= best_before);
        }
    }
}
