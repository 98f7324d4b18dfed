//! The canonical dithered modulo-lattice scheme and its preset
//! parameterizations.
//!
//! Encoder `i` sends `Xᵢ = [Vᵢ − gᵢSᵢ + Dᵢ] mod Λᵢ` and the receiver front end
//! computes `Y′ = [α_r·Y − γ·D₁ − β·D₂] mod Λ_r`. The state gain `gᵢ` equals
//! `αᵢ` except for the common-interference scheme, where user 2 scales the
//! residual state `(1 − α₁)S_c`.

mod common;
mod presets;
mod simulate;

pub use common::{decode_common_three_stage, CommonDecode, StageOneDecision};
pub use presets::{build_preset, equiv_noise_of, helper_quantizer_residual, Family, Preset, PresetKind, RateTarget, Stage, StagePath};
pub(crate) use presets::lemma7_rates;
pub use simulate::{simulate_equivalent, simulate_stage, MessageMode, SimRequest, StageSamples, CHUNK};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, ChannelKind, PowerConfig};
use crate::entropy::gaussian_entropy;
use crate::lattice::{Lattice, LatticeError, LATTICE_TOL};

/// Shaping loss `½log₂(πe/6)` of the one-dimensional lattice, in bits.
pub fn shaping_loss_1d() -> f64 {
    0.5 * (std::f64::consts::PI * std::f64::consts::E / 6.0).log2()
}

#[derive(Debug, Error, PartialEq)]
pub enum SchemeError {
    #[error("{preset}: validity condition violated: {condition}")]
    Validity { preset: &'static str, condition: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("message point lies outside the fundamental Voronoi region")]
    MessageOutsideCell,
    #[error("dither for user {0} is required by the configuration but missing")]
    MissingDither(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("operation needs one-dimensional lattices")]
    NotOneDimensional,
    #[error("stage index {0} out of range")]
    NoSuchStage(usize),
    #[error("configuration invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// One independent term of an equivalent modulo channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// `w·U` with `U` uniform over the cell `(−cell/2, cell/2]`.
    Uniform { cell: f64, weight: f64 },
    Gaussian { variance: f64 },
}

impl Component {
    pub fn variance(&self) -> f64 {
        match *self {
            Self::Uniform { cell, weight } => (cell * weight).powi(2) / 12.0,
            Self::Gaussian { variance } => variance,
        }
    }

    fn is_degenerate(&self) -> bool {
        match *self {
            Self::Uniform { cell, weight } => cell * weight == 0.0,
            Self::Gaussian { variance } => variance == 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            Self::Uniform { cell, weight } => cell.is_finite() && weight.is_finite(),
            Self::Gaussian { variance } => variance.is_finite() && variance >= 0.0,
        }
    }
}

/// A one-dimensional modulo channel `Y′ = [S + W] mod Λ_r` with independent
/// signal terms `S` and noise terms `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivNoiseSpec {
    pub wrap: Lattice,
    pub signal: Vec<Component>,
    pub noise: Vec<Component>,
}

impl EquivNoiseSpec {
    /// Builds a spec, dropping terms with zero weight or variance.
    pub fn new(wrap: Lattice, signal: Vec<Component>, noise: Vec<Component>) -> Result<Self, SchemeError> {
        if signal.iter().chain(&noise).any(|c| !c.is_finite()) {
            return Err(SchemeError::Invariant("non-finite component".into()));
        }
        let keep = |v: Vec<Component>| v.into_iter().filter(|c| !c.is_degenerate()).collect();
        Ok(Self { wrap, signal: keep(signal), noise: keep(noise) })
    }

    /// Variance of the unwrapped noise sum.
    pub fn noise_variance(&self) -> f64 {
        self.noise.iter().map(Component::variance).sum()
    }

    /// Whether some uniform signal term covers a whole number of cells, in
    /// which case the output is exactly uniform over the cell.
    pub fn signal_fills_cell(&self) -> bool {
        let Some(l) = self.wrap.scale() else { return false };
        self.signal.iter().any(|c| match *c {
            Component::Uniform { cell, weight } => {
                let r = (cell * weight).abs() / l;
                r >= 1.0 - LATTICE_TOL && (r - r.round()).abs() <= LATTICE_TOL
            }
            Component::Gaussian { .. } => false,
        })
    }

    /// One-dimensional lower bound on the rate.
    ///
    /// Conditioning on the noise gives `h(Y′) ≥ log₂ min(w, L)` for a uniform
    /// signal term of width `w`, and `h([W] mod Λ_r) ≤ ½log₂(2πe·Var W)`.
    /// For a signal filling the cell this is `½log₂(σ²_Λ/Var W) − ½log₂(πe/6)`.
    pub fn analytic_1d_bound(&self) -> f64 {
        let Some(l) = self.wrap.scale() else { return 0.0 };
        let h_out = self
            .signal
            .iter()
            .filter_map(|c| match *c {
                Component::Uniform { cell, weight } => Some((cell * weight).abs().min(l).log2()),
                Component::Gaussian { .. } => None,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let var = self.noise_variance();
        if var == 0.0 || !h_out.is_finite() {
            return 0.0;
        }
        (h_out - gaussian_entropy(var)).max(0.0)
    }
}

/// A scaling relation `target = factor · source` between scheme lattices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeRole {
    User1,
    User2,
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeRelation {
    pub target: LatticeRole,
    pub source: LatticeRole,
    pub factor: f64,
}

/// Fully resolved parameters of the canonical scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub family: Family,
    pub channel: ChannelKind,
    pub powers: PowerConfig,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha_r: f64,
    /// Receiver scaling of `D₂`.
    pub beta: f64,
    /// Receiver scaling of `D₁`.
    pub gamma: f64,
    /// Multipliers of the states inside the encoders.
    pub state_gain: [f64; 2],
    pub lattices: [Lattice; 2],
    pub receiver: Lattice,
    pub dithered: [bool; 2],
    pub carries_message: [bool; 2],
    /// Declared lattice relations that make quantization terms vanish.
    pub relations: Vec<LatticeRelation>,
    /// Stage-II combining factor of the common-interference decoder.
    pub combiner: Option<f64>,
}

impl SchemeConfig {
    fn lattice(&self, role: LatticeRole) -> &Lattice {
        match role {
            LatticeRole::User1 => &self.lattices[0],
            LatticeRole::User2 => &self.lattices[1],
            LatticeRole::Receiver => &self.receiver,
        }
    }

    /// Power actually spent by each user, the lattice second moment.
    pub fn used_power(&self) -> [Option<f64>; 2] {
        [self.lattices[0].second_moment(), self.lattices[1].second_moment()]
    }

    /// Checks the scalar ranges, that no user exceeds its power constraint,
    /// and every declared lattice relation.
    pub fn validate(&self) -> Result<(), SchemeError> {
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2), ("alpha_r", self.alpha_r)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(SchemeError::Invariant(format!("{name} = {a} outside [0, 1]")));
            }
        }
        let limits = [self.powers.p1, self.powers.p2];
        for (i, (l, p)) in self.lattices.iter().zip(limits).enumerate() {
            if let Some(sm) = l.second_moment() {
                if sm > p * (1.0 + LATTICE_TOL) {
                    return Err(SchemeError::Invariant(format!(
                        "user {} lattice second moment {sm} exceeds power {p}",
                        i + 1
                    )));
                }
            }
        }
        for r in &self.relations {
            let (t, s) = (self.lattice(r.target).scale(), self.lattice(r.source).scale());
            if let (Some(t), Some(s)) = (t, s) {
                if (t - r.factor * s).abs() > LATTICE_TOL * t.max(1.0) {
                    return Err(SchemeError::Invariant(format!(
                        "{:?} = {} · {:?} does not hold: {t} vs {}",
                        r.target,
                        r.factor,
                        r.source,
                        r.factor * s
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), SchemeError> {
    if expected == got {
        Ok(())
    } else {
        Err(SchemeError::Dimension { expected, got })
    }
}

/// `X = [v − α·s + d] mod Λ`.
pub fn encode(v: &[f64], s: &[f64], d: &[f64], alpha: f64, lattice: &Lattice) -> Result<Vec<f64>, SchemeError> {
    let n = lattice.dim();
    for x in [v, s, d] {
        check_dim(n, x.len())?;
    }
    if !lattice.in_voronoi(v)? {
        return Err(SchemeError::MessageOutsideCell);
    }
    let u: Vec<f64> = v.iter().zip(s).zip(d).map(|((v, s), d)| v - alpha * s + d).collect();
    Ok(lattice.mod_lattice(&u)?)
}

/// `Y′ = [α_r·y − γ·d₁ − β·d₂] mod Λ_r`; a dither may be omitted only for an
/// undithered user.
pub fn receive_front_end(
    y: &[f64],
    d1: Option<&[f64]>,
    d2: Option<&[f64]>,
    cfg: &SchemeConfig,
) -> Result<Vec<f64>, SchemeError> {
    let n = cfg.receiver.dim();
    check_dim(n, y.len())?;
    let mut u: Vec<f64> = y.iter().map(|v| cfg.alpha_r * v).collect();
    for (i, (d, scale)) in [(d1, cfg.gamma), (d2, cfg.beta)].into_iter().enumerate() {
        match d {
            Some(d) => {
                check_dim(n, d.len())?;
                for (a, b) in u.iter_mut().zip(d) {
                    *a -= scale * b;
                }
            }
            None if cfg.dithered[i] => return Err(SchemeError::MissingDither(i + 1)),
            None => {}
        }
    }
    Ok(cfg.receiver.mod_lattice(&u)?)
}
