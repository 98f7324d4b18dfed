//! Preset parameterizations of the canonical scheme.
//!
//! Every preset runs on one-dimensional lattices `ΔᵢZ` with `Δᵢ = √(12Pᵢ)`.
//! Where a construction only needs part of a user's power budget the lattice
//! is built for the reduced power, so the configuration invariant is
//! `σ²_Λᵢ ≤ Pᵢ` with equality whenever the full budget is used.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Component, EquivNoiseSpec, LatticeRelation, LatticeRole, SchemeConfig, SchemeError};
use crate::bounds::{cap, helper_inner_raw, thm4_raw};
use crate::channel::{ChannelKind, PowerConfig};
use crate::lattice::Lattice;

/// Smallest MMSE-type scaling accepted where a ratio of scalings is formed.
const MIN_ALPHA: f64 = 1e-6;

/// Relative slack on the validity inequalities, so boundary cases such as
/// `P₂ = P₁ + N` are accepted despite rounding.
const BOUNDARY_SLACK: f64 = 1e-12;

/// User-facing preset names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    /// One shared lattice for the weaker power, unit scalings.
    Thm2 { dithered: bool },
    /// Shared lattice, `α = 2P/(2P+N)`, both users dithered.
    SymmetricMmse,
    /// User 1 helps user 2 with nested (scaled) lattices.
    Thm3Helper,
    /// One user transmits, the other cancels its own state.
    Thm4,
    /// Single dirty user helping at `|P₁ − P₂| ≥ N`.
    HelperThm5,
    /// Single dirty user helping at `|P₁ − P₂| < N`.
    HelperLemma4,
    /// Successive two-stage decoding with a free scaling `α₁`.
    Lemma7 { alpha1: f64 },
    /// Common interference with the three-stage decoder.
    Common,
}

impl PresetKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Thm2 { dithered: false } => "thm2",
            Self::Thm2 { dithered: true } => "thm2_dithered",
            Self::SymmetricMmse => "symmetric_mmse",
            Self::Thm3Helper => "thm3_helper",
            Self::Thm4 => "thm4",
            Self::HelperThm5 => "helper_thm5",
            Self::HelperLemma4 => "helper_lemma4",
            Self::Lemma7 { .. } => "lemma7",
            Self::Common => "common",
        }
    }

    /// All presets, with `lemma7` at the MMSE scaling `α₁ = P₁/(P₁+N)`.
    pub fn all_for(p: &PowerConfig) -> Vec<Self> {
        vec![
            Self::Thm2 { dithered: false },
            Self::Thm2 { dithered: true },
            Self::SymmetricMmse,
            Self::Thm3Helper,
            Self::Thm4,
            Self::HelperThm5,
            Self::HelperLemma4,
            Self::Lemma7 { alpha1: p.p1 / (p.p1 + p.n) },
            Self::Common,
        ]
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lemma7 { alpha1 } => write!(f, "lemma7({alpha1})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for PresetKind {
    type Err = SchemeError;

    /// Parses a preset name; `lemma7` takes its scaling as `lemma7(0.5)` or
    /// `lemma7:0.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let unknown = || SchemeError::UnknownPreset(s.to_string());
        Ok(match s {
            "thm2" => Self::Thm2 { dithered: false },
            "thm2_dithered" => Self::Thm2 { dithered: true },
            "symmetric_mmse" => Self::SymmetricMmse,
            "thm3_helper" => Self::Thm3Helper,
            "thm4" => Self::Thm4,
            "helper_thm5" => Self::HelperThm5,
            "helper_lemma4" => Self::HelperLemma4,
            "common" => Self::Common,
            _ => {
                let rest = s.strip_prefix("lemma7").ok_or_else(unknown)?;
                let arg = rest
                    .strip_prefix(':')
                    .or_else(|| rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')))
                    .ok_or_else(unknown)?;
                Self::Lemma7 { alpha1: arg.trim().parse().map_err(|_| unknown())? }
            }
        })
    }
}

/// Resolved construction, including which branch of a preset applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Shared lattice; covers the undithered and dithered unit-scaling
    /// scheme and the symmetric MMSE scheme.
    SharedLattice,
    /// Helper is the stronger user and the receiver wraps on `Λ₂ = α₂Λ₁`.
    Thm3StrongHelper,
    /// Helper is the weaker user and the receiver wraps on `Λ₁ = α₁Λ₂`.
    Thm3WeakHelper,
    /// `P₁ ≤ P₂`: receiver wraps on `Λ₁ = (α₁/α₂)Λ₂`.
    Thm4Low,
    /// `P₁ > P₂`: receiver wraps on `Λ₂ = (α₂/α₁)Λ₁`.
    Thm4High,
    /// Single dirty helper with `α₁ = P₁/(P₁+N)` or the power-matched `α₁`.
    HelperScaled,
    /// Single dirty helper with `α₁ = 1` when `P₁ ≥ P₂ + N`.
    HelperUnit,
    Lemma7,
    Common,
}

/// Which rate a stage measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateTarget {
    Sum,
    User1,
    User2,
}

/// How a stage's modulo channel is produced from the received signal.
#[derive(Debug, Clone, PartialEq)]
pub enum StagePath {
    /// The receiver front end output `Y′`.
    FrontEnd,
    /// `[[Y′ − V₁] mod Λ₁] mod Λ′_r` with `V₁` known to the decoder.
    GenieSecond { wrap: Lattice },
    /// Stage III of the common-interference decoder.
    CommonStageThree,
}

/// One rate-bearing modulo channel of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub label: &'static str,
    pub target: RateTarget,
    pub spec: EquivNoiseSpec,
    /// Signal as `w₁V₁ + w₂V₂`.
    pub signal_weights: [f64; 2],
    /// Rate predicted for good high-dimensional lattices.
    pub predicted: f64,
    /// Outer bound on the rate this stage measures.
    pub outer: f64,
    pub path: StagePath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub kind: PresetKind,
    pub cfg: SchemeConfig,
    pub stages: Vec<Stage>,
}

fn lat(power: f64) -> Result<Lattice, SchemeError> {
    Ok(Lattice::with_second_moment(power)?)
}

fn delta(l: &Lattice) -> f64 {
    l.scale().expect("presets use one-dimensional lattices")
}

fn uni(l: &Lattice, weight: f64) -> Component {
    Component::Uniform { cell: delta(l), weight }
}

fn violated(preset: &'static str, condition: String) -> SchemeError {
    SchemeError::Validity { preset, condition }
}

/// Builds a preset and its predicted rates, or reports which validity
/// condition fails.
pub fn build_preset(kind: &PresetKind, p: PowerConfig) -> Result<Preset, SchemeError> {
    let cfg = match *kind {
        PresetKind::Thm2 { dithered } => shared(p, 1.0, dithered),
        PresetKind::SymmetricMmse => {
            let pm = p.p_min();
            shared(p, 2.0 * pm / (2.0 * pm + p.n), true)
        }
        PresetKind::Thm3Helper => thm3_helper(p),
        PresetKind::Thm4 => thm4(p),
        PresetKind::HelperThm5 => helper_thm5(p),
        PresetKind::HelperLemma4 => helper_lemma4(p),
        PresetKind::Lemma7 { alpha1 } => lemma7(p, alpha1),
        PresetKind::Common => common(p),
    }?;
    cfg.validate()?;
    let stages = stages_of(&cfg)?;
    Ok(Preset { kind: *kind, cfg, stages })
}

/// The equivalent modulo channel of the first decoding stage.
pub fn equiv_noise_of(cfg: &SchemeConfig) -> Result<EquivNoiseSpec, SchemeError> {
    Ok(stages_of(cfg)?.remove(0).spec)
}

#[allow(clippy::too_many_arguments)]
fn config(
    family: Family,
    channel: ChannelKind,
    p: PowerConfig,
    alphas: [f64; 3],
    beta: f64,
    gamma: f64,
    lattices: [Lattice; 2],
    receiver: Lattice,
    dithered: [bool; 2],
    carries_message: [bool; 2],
) -> SchemeConfig {
    SchemeConfig {
        family,
        channel,
        powers: p,
        alpha1: alphas[0],
        alpha2: alphas[1],
        alpha_r: alphas[2],
        beta,
        gamma,
        state_gain: [alphas[0], alphas[1]],
        lattices,
        receiver,
        dithered,
        carries_message,
        relations: Vec::new(),
        combiner: None,
    }
}

fn shared(p: PowerConfig, alpha: f64, dithered: bool) -> Result<SchemeConfig, SchemeError> {
    let l = lat(p.p_min())?;
    let d = if dithered { 1.0 } else { 0.0 };
    Ok(config(
        Family::SharedLattice,
        ChannelKind::DoublyDirty,
        p,
        [alpha; 3],
        d,
        d,
        [l.clone(), l.clone()],
        l,
        [dithered; 2],
        [true; 2],
    ))
}

fn thm3_helper(p: PowerConfig) -> Result<SchemeConfig, SchemeError> {
    let slack = (p.p1 * p.p2).sqrt() - p.p_min();
    if p.n > slack * (1.0 + BOUNDARY_SLACK) {
        return Err(violated("thm3_helper", format!("N = {} > √(P₁P₂) − min(P₁,P₂) = {slack}", p.n)));
    }
    if p.p1 >= p.p2 {
        let a2 = p.p2 / (p.p2 + p.n);
        let l2 = lat(p.p2)?;
        let l1 = l2.scaled(1.0 / a2)?;
        let mut cfg = config(
            Family::Thm3StrongHelper,
            ChannelKind::DoublyDirty,
            p,
            [1.0, a2, a2],
            1.0,
            a2,
            [l1, l2.clone()],
            l2,
            [true, true],
            [false, true],
        );
        cfg.relations.push(LatticeRelation { target: LatticeRole::User2, source: LatticeRole::User1, factor: a2 });
        Ok(cfg)
    } else {
        let a1 = p.p1 / (p.p1 + p.n);
        let l1 = lat(p.p1)?;
        let l2 = l1.scaled(1.0 / a1)?;
        let mut cfg = config(
            Family::Thm3WeakHelper,
            ChannelKind::DoublyDirty,
            p,
            [a1, 1.0, a1],
            0.0,
            1.0,
            [l1.clone(), l2],
            l1,
            [true, false],
            [false, true],
        );
        cfg.relations.push(LatticeRelation { target: LatticeRole::User1, source: LatticeRole::User2, factor: a1 });
        Ok(cfg)
    }
}

fn thm4(p: PowerConfig) -> Result<SchemeConfig, SchemeError> {
    let slack = (p.p1 * p.p2).sqrt() - p.p_min();
    if p.n < slack * (1.0 - BOUNDARY_SLACK) {
        return Err(violated("thm4", format!("N = {} < √(P₁P₂) − min(P₁,P₂) = {slack}", p.n)));
    }
    let (s1, s2) = (p.p1.sqrt(), p.p2.sqrt());
    let total = p.p1 + p.p2 + p.n;
    let l1 = lat(p.p1)?;
    let l2 = lat(p.p2)?;
    if p.p1 <= p.p2 {
        let a1 = s1 * (s1 + s2) / total;
        let a2 = a1 * s2 / s1;
        if a1.min(a2) < MIN_ALPHA {
            return Err(violated("thm4", format!("scaling {} below {MIN_ALPHA}", a1.min(a2))));
        }
        let mut cfg = config(
            Family::Thm4Low,
            ChannelKind::DoublyDirty,
            p,
            [a1, a2, a1],
            a1 / a2,
            1.0,
            [l1.clone(), l2],
            l1,
            [true, true],
            [true, false],
        );
        cfg.relations.push(LatticeRelation { target: LatticeRole::User1, source: LatticeRole::User2, factor: a1 / a2 });
        Ok(cfg)
    } else {
        let a2 = s2 * (s1 + s2) / total;
        let a1 = a2 * s1 / s2;
        if a1.min(a2) < MIN_ALPHA {
            return Err(violated("thm4", format!("scaling {} below {MIN_ALPHA}", a1.min(a2))));
        }
        let mut cfg = config(
            Family::Thm4High,
            ChannelKind::DoublyDirty,
            p,
            [a1, a2, a2],
            1.0,
            a2 / a1,
            [l1, l2.clone()],
            l2,
            [true, true],
            [true, false],
        );
        cfg.relations.push(LatticeRelation { target: LatticeRole::User2, source: LatticeRole::User1, factor: a2 / a1 });
        Ok(cfg)
    }
}

/// Single dirty helper: user 1 sends `[−α₁S₁ + D₁] mod Λ₁`, user 2 sends its
/// message point uncoded.
fn helper_config(family: Family, p: PowerConfig, a1: f64, p1: f64, p2: f64) -> Result<SchemeConfig, SchemeError> {
    let l1 = lat(p1)?;
    let l2 = lat(p2)?;
    let ratio = delta(&l2) / delta(&l1);
    let mut cfg = config(
        family,
        ChannelKind::SingleDirty,
        p,
        [a1, 0.0, a1],
        0.0,
        1.0,
        [l1.clone(), l2],
        l1,
        [true, false],
        [false, true],
    );
    cfg.relations.push(LatticeRelation { target: LatticeRole::User2, source: LatticeRole::User1, factor: ratio });
    Ok(cfg)
}

fn helper_thm5(p: PowerConfig) -> Result<SchemeConfig, SchemeError> {
    let gap = (p.p1 - p.p2).abs();
    if p.n > gap * (1.0 + BOUNDARY_SLACK) {
        return Err(violated("helper_thm5", format!("N = {} > |P₁ − P₂| = {gap}", p.n)));
    }
    if p.p2 >= p.p1 {
        let a1 = p.p1 / (p.p1 + p.n);
        helper_config(Family::HelperScaled, p, a1, p.p1, (p.p1 + p.n).min(p.p2))
    } else {
        helper_config(Family::HelperUnit, p, 1.0, (p.p2 + p.n).min(p.p1), p.p2)
    }
}

fn helper_lemma4(p: PowerConfig) -> Result<SchemeConfig, SchemeError> {
    let gap = (p.p1 - p.p2).abs();
    if gap >= p.n {
        return Err(violated("helper_lemma4", format!("|P₁ − P₂| = {gap} ≥ N = {}", p.n)));
    }
    let a1 = 2.0 * p.p1 / (p.p1 + p.p2 + p.n);
    helper_config(Family::HelperScaled, p, a1, p.p1, p.p2)
}

fn lemma7(p: PowerConfig, a1: f64) -> Result<SchemeConfig, SchemeError> {
    if !(MIN_ALPHA..=1.0).contains(&a1) {
        return Err(violated("lemma7", format!("α₁ = {a1} outside [{MIN_ALPHA}, 1]")));
    }
    let mut cfg = helper_config(Family::Lemma7, p, a1, p.p1, p.p2)?;
    cfg.carries_message = [true, true];
    Ok(cfg)
}

fn common(p: PowerConfig) -> Result<SchemeConfig, SchemeError> {
    let a1 = p.p1 / (p.p1 + p.p2 + p.n);
    let a2 = p.p2 / (p.p2 + p.n);
    let l1 = lat(p.p1)?;
    let l2 = lat(p.p2)?;
    let mut cfg = config(
        Family::Common,
        ChannelKind::Common,
        p,
        [a1, a2, a1],
        0.0,
        1.0,
        [l1.clone(), l2],
        l1,
        [true, true],
        [true, true],
    );
    cfg.state_gain = [a1, a2 * (1.0 - a1)];
    cfg.combiner = Some(1.0 / (1.0 - a1));
    Ok(cfg)
}

/// The rate-bearing modulo channels of a configuration.
fn stages_of(cfg: &SchemeConfig) -> Result<Vec<Stage>, SchemeError> {
    let p = cfg.powers;
    let [l1, l2] = &cfg.lattices;
    let lr = &cfg.receiver;
    let n = p.n;
    let ar = cfg.alpha_r;
    let spec = |signal: Vec<Component>, noise: Vec<Component>| EquivNoiseSpec::new(lr.clone(), signal, noise);
    let front = |label, target, spec, w: [f64; 2], predicted, outer| Stage {
        label,
        target,
        spec,
        signal_weights: w,
        predicted,
        outer,
        path: StagePath::FrontEnd,
    };
    let stages = match cfg.family {
        Family::SharedLattice => {
            let pm = p.p_min();
            let predicted = if cfg.alpha_r == 1.0 {
                (0.5 * (pm / n).log2()).max(0.0)
            } else {
                (0.5 * (0.5 + pm / n).log2()).max(0.0)
            };
            vec![front(
                "sum",
                RateTarget::Sum,
                spec(
                    vec![uni(l1, 1.0), uni(l2, 1.0)],
                    vec![uni(l1, 1.0 - cfg.alpha1), uni(l2, 1.0 - cfg.alpha2), Component::Gaussian { variance: ar * ar * n }],
                )?,
                [1.0, 1.0],
                predicted,
                cap(pm / n),
            )]
        }
        Family::Thm3StrongHelper => vec![front(
            "user2",
            RateTarget::User2,
            spec(vec![uni(l2, 1.0)], vec![uni(l2, 1.0 - ar), Component::Gaussian { variance: ar * ar * n }])?,
            [0.0, 1.0],
            cap(p.p2 / n),
            cap(p.p_min() / n),
        )],
        Family::Thm3WeakHelper => vec![front(
            "user2",
            RateTarget::User2,
            spec(vec![uni(l2, ar)], vec![uni(l1, 1.0 - ar), Component::Gaussian { variance: ar * ar * n }])?,
            [0.0, ar],
            cap(p.p1 / n),
            cap(p.p_min() / n),
        )],
        Family::Thm4Low => {
            let w2 = (p.p1 / p.p2).sqrt() - cfg.alpha1;
            vec![front(
                "user1",
                RateTarget::User1,
                spec(
                    vec![uni(l1, 1.0)],
                    vec![uni(l1, 1.0 - cfg.alpha1), uni(l2, w2), Component::Gaussian { variance: ar * ar * n }],
                )?,
                [1.0, 0.0],
                thm4_raw(p).max(0.0),
                cap(p.p_min() / n),
            )]
        }
        Family::Thm4High => {
            let r = (p.p2 / p.p1).sqrt();
            vec![front(
                "user1",
                RateTarget::User1,
                spec(
                    vec![uni(l1, r)],
                    vec![uni(l1, r - cfg.alpha2), uni(l2, 1.0 - cfg.alpha2), Component::Gaussian { variance: ar * ar * n }],
                )?,
                [r, 0.0],
                thm4_raw(p).max(0.0),
                cap(p.p_min() / n),
            )]
        }
        Family::HelperScaled | Family::HelperUnit => {
            let predicted = if (p.p1 - p.p2).abs() >= n {
                cap(p.p_min() / n)
            } else {
                helper_inner_raw(p)
            };
            vec![front(
                "user2",
                RateTarget::User2,
                spec(vec![uni(l2, ar)], vec![uni(l1, 1.0 - ar), Component::Gaussian { variance: ar * ar * n }])?,
                [0.0, ar],
                predicted,
                cap(p.p_min() / n),
            )]
        }
        Family::Lemma7 => {
            let a = cfg.alpha1;
            let (r1, r2) = lemma7_rates(p, a);
            let total = (1.0 - a).powi(2) * p.p1 + a * a * (n + p.p2);
            let beta = (total.min(p.p1) / p.p1).sqrt();
            let second = lr.scaled(beta)?;
            vec![
                front(
                    "user1",
                    RateTarget::User1,
                    spec(vec![uni(l1, 1.0)], vec![uni(l2, a), uni(l1, 1.0 - a), Component::Gaussian { variance: a * a * n }])?,
                    [1.0, 0.0],
                    r1,
                    cap(p.p1 / n),
                ),
                Stage {
                    label: "user2",
                    target: RateTarget::User2,
                    spec: EquivNoiseSpec::new(
                        second.clone(),
                        vec![uni(l2, a)],
                        vec![uni(l1, 1.0 - a), Component::Gaussian { variance: a * a * n }],
                    )?,
                    signal_weights: [0.0, a],
                    predicted: r2,
                    outer: cap(p.p_min() / n),
                    path: StagePath::GenieSecond { wrap: second },
                },
            ]
        }
        Family::Common => {
            let (a1, a2) = (cfg.alpha1, cfg.alpha2);
            vec![
                front(
                    "user1",
                    RateTarget::User1,
                    spec(vec![uni(l1, 1.0)], vec![uni(l1, 1.0 - a1), uni(l2, a1), Component::Gaussian { variance: a1 * a1 * n }])?,
                    [1.0, 0.0],
                    cap(p.p1 / (p.p2 + n)),
                    cap(p.p1 / n),
                ),
                Stage {
                    label: "user2",
                    target: RateTarget::User2,
                    spec: EquivNoiseSpec::new(
                        l2.clone(),
                        vec![uni(l2, 1.0)],
                        vec![uni(l2, 1.0 - a2), Component::Gaussian { variance: a2 * a2 * n }],
                    )?,
                    signal_weights: [0.0, 1.0],
                    predicted: cap(p.p2 / n),
                    outer: cap(p.p2 / n),
                    path: StagePath::CommonStageThree,
                },
            ]
        }
    };
    Ok(stages)
}

/// Rate pair of the two-stage scheme at scaling `α₁`.
pub(crate) fn lemma7_rates(p: PowerConfig, a: f64) -> (f64, f64) {
    let total = (1.0 - a).powi(2) * p.p1 + a * a * (p.n + p.p2);
    let m = total.min(p.p1);
    let self_noise = (1.0 - a).powi(2) * p.p1 + a * a * p.n;
    (0.5 * (p.p1 / m).log2(), 0.5 * (m / self_noise).log2())
}

/// `α₂·Q_{Λ₁}(−s₁ + d₁)` reduced modulo `Λ₂` for the strong-helper
/// construction, with the quantizer output carried as an integer index `k`
/// so that the scaled point is formed as `k·Δ₂` and lies on `Λ₂` exactly.
pub fn helper_quantizer_residual(cfg: &SchemeConfig, s1: f64, d1: f64) -> Result<f64, SchemeError> {
    if cfg.family != Family::Thm3StrongHelper {
        return Err(SchemeError::Invariant("residual is defined for the strong-helper construction".into()));
    }
    let (d1l, d2l) = (delta(&cfg.lattices[0]), delta(&cfg.lattices[1]));
    let k = Lattice::nearest_index_1d(d1l, -s1 + d1);
    Ok(Lattice::mod_scalar(d2l, k * d2l))
}
