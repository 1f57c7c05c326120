//! Logistic-map chaotic sequences and the sine-cosine chaotic exponent used
//! for the chaotic gravitational constant.

use thiserror::Error;

/// Logistic parameter giving fully chaotic behaviour.
pub const DEFAULT_LOGISTIC_A: f64 = 4.0;
/// First element of the sequence.
pub const DEFAULT_SEED_VALUE: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChaosError {
    #[error("sequence length must be at least 1")]
    EmptySequence,
    #[error("seed value {0} must lie strictly inside (0, 1)")]
    SeedOutOfRange(f64),
    #[error("logistic parameter {0} must lie in (0, 4]")]
    ParameterOutOfRange(f64),
    #[error("seed value {0} lands on a fixed point or periodic orbit of the logistic map")]
    DegenerateSeed(f64),
    #[error("invalid chaotic alpha configuration: {0}")]
    InvalidAlphaConfig(&'static str),
}

/// A precomputed logistic-map sequence `cs(1..=T)`.
///
/// Element `t` (1-based) is the value consumed by iteration `t` of a run, both
/// by the chaotic exponent and by the chaotic opposition step.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaoticSequence {
    values: Vec<f64>,
    a: f64,
    seed_value: f64,
}

impl ChaoticSequence {
    /// Iterates `cs(t+1) = a * cs(t) * (1 - cs(t))` starting from `seed_value`.
    pub fn logistic(a: f64, seed_value: f64, len: usize) -> Result<Self, ChaosError> {
        if len == 0 {
            return Err(ChaosError::EmptySequence);
        }
        if !a.is_finite() || a <= 0.0 || a > 4.0 {
            return Err(ChaosError::ParameterOutOfRange(a));
        }
        if !seed_value.is_finite() || seed_value <= 0.0 || seed_value >= 1.0 {
            return Err(ChaosError::SeedOutOfRange(seed_value));
        }
        let mut values = Vec::with_capacity(len);
        let mut cs = seed_value;
        values.push(cs);
        for _ in 1..len {
            let next = a * cs * (1.0 - cs);
            // The orbit collapsed onto 0 or 1 (0.5 -> 1 -> 0 at a = 4) or onto
            // the fixed point 1 - 1/a (0.25 -> 0.75 -> 0.75).
            if next <= 0.0 || next >= 1.0 || next == cs {
                return Err(ChaosError::DegenerateSeed(seed_value));
            }
            cs = next;
            values.push(cs);
        }
        Ok(Self {
            values,
            a,
            seed_value,
        })
    }

    /// The standard sequence: `a = 4`, `cs(1) = 0.7`.
    pub fn standard(len: usize) -> Result<Self, ChaosError> {
        Self::logistic(DEFAULT_LOGISTIC_A, DEFAULT_SEED_VALUE, len)
    }

    /// `cs(t)` for 1-based `t`.
    ///
    /// # Panics
    /// If `t` is 0 or beyond the sequence length.
    pub fn at(&self, t: usize) -> f64 {
        assert!(t >= 1, "chaotic sequence is 1-based");
        self.values[t - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn seed_value(&self) -> f64 {
        self.seed_value
    }
}

/// Parameters of the sine-cosine chaotic exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaoticAlphaConfig {
    /// Amplitude of the perturbation at `t = 0`.
    pub amplitude: f64,
    /// Centre value the exponent oscillates around.
    pub center: f64,
    /// Multiplier applied to the final exponent.
    pub scale: f64,
    /// Total number of iterations.
    pub total_iterations: usize,
}

impl ChaoticAlphaConfig {
    pub fn new(total_iterations: usize) -> Self {
        Self {
            amplitude: 2.0,
            center: 25.0,
            scale: 1.0,
            total_iterations,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<(), ChaosError> {
        if !(self.amplitude.is_finite() && self.center.is_finite() && self.scale.is_finite()) {
            return Err(ChaosError::InvalidAlphaConfig("constants must be finite"));
        }
        if self.amplitude < 0.0 {
            return Err(ChaosError::InvalidAlphaConfig("amplitude must be >= 0"));
        }
        if self.center <= 0.0 {
            return Err(ChaosError::InvalidAlphaConfig("center must be > 0"));
        }
        if self.scale <= 0.0 {
            return Err(ChaosError::InvalidAlphaConfig("scale must be > 0"));
        }
        if self.total_iterations == 0 {
            return Err(ChaosError::InvalidAlphaConfig(
                "total iterations must be >= 1",
            ));
        }
        Ok(())
    }

    /// Closed interval every exponent produced by this config falls in.
    pub fn envelope(&self) -> (f64, f64) {
        (
            self.scale * (self.center - self.amplitude),
            self.scale * (self.center + self.amplitude),
        )
    }
}

/// Chaotic exponent for iteration `t` of `cfg.total_iterations`.
///
/// `coin` is a uniform draw in `[0, 1]` supplied by the caller's RNG; values
/// below 0.5 take the sine branch, everything else the cosine branch.
pub fn chaotic_alpha(cfg: &ChaoticAlphaConfig, cs_t: f64, t: usize, coin: f64) -> f64 {
    debug_assert!(t <= cfg.total_iterations);
    let r = cfg.amplitude * (1.0 - t as f64 / cfg.total_iterations as f64);
    let alpha = if coin < 0.5 {
        cfg.center - r * cs_t.sin()
    } else {
        cfg.center + r * cs_t.cos()
    };
    cfg.scale * alpha
}
