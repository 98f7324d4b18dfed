//! Gaussian dirty MAC models and interference-state generation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Strong-interference variance used by simulations: `10⁴ · max(P₁, P₂)`.
pub fn strong_interference(p1: f64, p2: f64) -> f64 {
    1e4 * p1.max(p2)
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("{0} must be strictly positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("user count must be at least 2, got {0}")]
    TooFewUsers(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{kind} expects {inputs} inputs and {states} states, got {got_inputs} and {got_states}")]
    Arity { kind: &'static str, inputs: usize, states: usize, got_inputs: usize, got_states: usize },
    #[error("correlation must satisfy |ρ| < 1, got {0}")]
    Correlation(f64),
    #[error("interference variance must be nonnegative, got {0}")]
    NegativeVariance(f64),
}

/// Power constraints and noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub p1: f64,
    pub p2: f64,
    /// Noise variance.
    pub n: f64,
}

impl PowerConfig {
    pub fn new(p1: f64, p2: f64, n: f64) -> Result<Self, ChannelError> {
        for (name, v) in [("P1", p1), ("P2", p2), ("N", n)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ChannelError::NonPositive(name, v));
            }
        }
        Ok(Self { p1, p2, n })
    }

    pub fn symmetric(p: f64, n: f64) -> Result<Self, ChannelError> {
        Self::new(p, p, n)
    }

    pub fn p_min(&self) -> f64 {
        self.p1.min(self.p2)
    }

    pub fn p_max(&self) -> f64 {
        self.p1.max(self.p2)
    }

    /// The same configuration with the users exchanged.
    pub fn swapped(&self) -> Self {
        Self { p1: self.p2, p2: self.p1, n: self.n }
    }
}

/// The symmetric K-user model: every user has power `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KUserConfig {
    pub k: usize,
    pub p: f64,
    pub n: f64,
}

impl KUserConfig {
    pub fn new(k: usize, p: f64, n: f64) -> Result<Self, ChannelError> {
        if k < 2 {
            return Err(ChannelError::TooFewUsers(k));
        }
        PowerConfig::new(p, p, n)?;
        Ok(Self { k, p, n })
    }
}

/// Deterministic high-amplitude interference patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarialPattern {
    /// `A·(2·frac(i/T) − 1)` with `T = 17√2`, a period incommensurate with any
    /// rational lattice scale.
    Sawtooth,
    /// `A·(2i/n − 1)`, a slow ramp across the block.
    Ramp,
    /// `(−1)ⁱ·A`; choose `A` near half a Voronoi cell to sit on cell boundaries.
    SignAlternating,
}

const SAWTOOTH_PERIOD: f64 = 17.0 * std::f64::consts::SQRT_2;

impl AdversarialPattern {
    /// Value at index `i` of a block of length `n`.
    pub fn value(self, i: usize, n: usize, amplitude: f64) -> f64 {
        match self {
            Self::Sawtooth => {
                let t = i as f64 / SAWTOOTH_PERIOD;
                amplitude * (2.0 * (t - t.floor()) - 1.0)
            }
            Self::Ramp => amplitude * (2.0 * i as f64 / n.max(1) as f64 - 1.0),
            Self::SignAlternating => {
                if i.is_multiple_of(2) {
                    amplitude
                } else {
                    -amplitude
                }
            }
        }
    }
}

/// How an interference sequence is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceSpec {
    Gaussian { variance: f64 },
    FixedSequence(Vec<f64>),
    Adversarial { pattern: AdversarialPattern, amplitude: f64 },
}

impl InterferenceSpec {
    /// Value at absolute index `i` of a block of length `n`, for generators
    /// that produce one sample at a time.
    pub(crate) fn sample_at<R: Rng + ?Sized>(&self, i: usize, n: usize, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian { variance } => {
                if *variance == 0.0 {
                    0.0
                } else {
                    variance.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal)
                }
            }
            Self::FixedSequence(v) => v[i],
            Self::Adversarial { pattern, amplitude } => pattern.value(i, n, *amplitude),
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<(), ChannelError> {
        match self {
            Self::Gaussian { variance } if !(*variance >= 0.0 && variance.is_finite()) => {
                Err(ChannelError::NegativeVariance(*variance))
            }
            Self::FixedSequence(v) if v.len() != n => {
                Err(ChannelError::LengthMismatch { expected: n, got: v.len() })
            }
            _ => Ok(()),
        }
    }
}

/// Draws an interference block of length `n`.
pub fn draw_state<R: Rng + ?Sized>(
    spec: &InterferenceSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, ChannelError> {
    spec.validate(n)?;
    if let InterferenceSpec::Gaussian { variance } = spec {
        if *variance == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let normal = Normal::new(0.0, variance.sqrt()).expect("validated variance");
        return Ok((0..n).map(|_| normal.sample(rng)).collect());
    }
    Ok((0..n).map(|i| spec.sample_at(i, n, rng)).collect())
}

/// Which Gaussian dirty MAC is being driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// `Y = X₁ + X₂ + S₁ + S₂ + Z`.
    DoublyDirty,
    /// `Y = X₁ + X₂ + S₁ + Z`.
    SingleDirty,
    /// `Y = X₁ + X₂ + S_c + Z`.
    Common,
    /// `Y = ΣXᵢ + ΣSᵢ + Z` over `K` users.
    KUser(usize),
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::DoublyDirty => "doubly_dirty",
            Self::SingleDirty => "single_dirty",
            Self::Common => "common",
            Self::KUser(_) => "k_user",
        }
    }

    /// `(inputs, states)` the model takes.
    pub fn arity(self) -> (usize, usize) {
        match self {
            Self::DoublyDirty => (2, 2),
            Self::SingleDirty | Self::Common => (2, 1),
            Self::KUser(k) => (k, k),
        }
    }
}

/// Received block for the selected model.
pub fn channel_output(
    kind: ChannelKind,
    inputs: &[&[f64]],
    states: &[&[f64]],
    noise: &[f64],
) -> Result<Vec<f64>, ChannelError> {
    let (ni, ns) = kind.arity();
    if inputs.len() != ni || states.len() != ns {
        return Err(ChannelError::Arity {
            kind: kind.name(),
            inputs: ni,
            states: ns,
            got_inputs: inputs.len(),
            got_states: states.len(),
        });
    }
    let n = noise.len();
    for v in inputs.iter().chain(states) {
        if v.len() != n {
            return Err(ChannelError::LengthMismatch { expected: n, got: v.len() });
        }
    }
    let mut y = noise.to_vec();
    for v in inputs.iter().chain(states) {
        for (acc, x) in y.iter_mut().zip(v.iter()) {
            *acc += x;
        }
    }
    Ok(y)
}

/// Jointly Gaussian interferences `(S̃₁, S̃₂)` with correlation `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedInterference {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

/// `S̃₁ = S₁ + β₁S₀`, `S̃₂ = S₂ + β₂S₀` with `S₀, S₁, S₂` independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Standard deviations of the private parts.
    pub sigma_s1: f64,
    pub sigma_s2: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Standard deviation of the shared part `S₀`.
    pub sigma_s0: f64,
}

impl Decomposition {
    /// Covariance `[[c11, c12], [c12, c22]]` of the reconstructed pair.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let s0 = self.sigma_s0 * self.sigma_s0;
        let c11 = self.sigma_s1 * self.sigma_s1 + self.beta1 * self.beta1 * s0;
        let c22 = self.sigma_s2 * self.sigma_s2 + self.beta2 * self.beta2 * s0;
        let c12 = self.beta1 * self.beta2 * s0;
        [[c11, c12], [c12, c22]]
    }

    /// One draw of `(S̃₁, S̃₂)` through the decomposition.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let mut g = || rng.sample::<f64, _>(rand_distr::StandardNormal);
        let s0 = self.sigma_s0 * g();
        let s1 = self.sigma_s1 * g();
        let s2 = self.sigma_s2 * g();
        (s1 + self.beta1 * s0, s2 + self.beta2 * s0)
    }
}

impl CorrelatedInterference {
    pub fn new(sigma1: f64, sigma2: f64, rho: f64) -> Result<Self, ChannelError> {
        for (name, v) in [("sigma1", sigma1), ("sigma2", sigma2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ChannelError::NonPositive(name, v));
            }
        }
        if rho.is_nan() || rho.abs() >= 1.0 {
            return Err(ChannelError::Correlation(rho));
        }
        Ok(Self { sigma1, sigma2, rho })
    }

    /// Target covariance of `(S̃₁, S̃₂)`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let c12 = self.rho * self.sigma1 * self.sigma2;
        [[self.sigma1 * self.sigma1, c12], [c12, self.sigma2 * self.sigma2]]
    }

    /// Splits the pair into private parts and a shared scaled component.
    pub fn decompose(&self) -> Decomposition {
        let a = self.rho.abs();
        let shrink = (1.0 - a).sqrt();
        Decomposition {
            sigma_s1: self.sigma1 * shrink,
            sigma_s2: self.sigma2 * shrink,
            beta1: self.rho.signum() * a.sqrt() * if self.rho == 0.0 { 0.0 } else { 1.0 },
            beta2: self.sigma2 / self.sigma1 * a.sqrt(),
            sigma_s0: self.sigma1,
        }
    }
}
