//! Monte Carlo simulation of the scheme on one-dimensional lattices.
//!
//! Samples are produced in fixed-size chunks. Chunk `c` draws from a ChaCha8
//! generator keyed by the seed with stream `c`, so results do not depend on
//! the thread count. Messages, dithers and noise come from the main seed and
//! interference from its own seed, in the same order for every preset. Two
//! presets run with the same seeds therefore see common random numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{EquivNoiseSpec, Component, Preset, SchemeConfig, SchemeError, StagePath};
use crate::channel::{strong_interference, ChannelKind, InterferenceSpec};
use crate::lattice::Lattice;

/// Samples per generator stream.
pub const CHUNK: usize = 1 << 16;

/// How message points are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MessageMode {
    /// Uniform over each carrying user's cell.
    Uniform,
    /// The same point every channel use, for users that carry a message.
    Fixed([f64; 2]),
    /// Equiprobable points of an `M`-PAM constellation centred in the cell.
    Pam { levels: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRequest {
    pub samples: usize,
    pub seed: u64,
    pub interference_seed: u64,
    /// States `S₁, S₂`; the second is ignored for models with one state.
    pub interference: [InterferenceSpec; 2],
    pub messages: MessageMode,
    /// Replaces the channel noise variance, for noiseless checks.
    pub noise_variance: Option<f64>,
}

impl SimRequest {
    /// Uniform messages and i.i.d. Gaussian states at the strong-interference
    /// variance of the preset's powers.
    pub fn new(samples: usize, seed: u64, preset: &Preset) -> Self {
        let p = preset.cfg.powers;
        let q = strong_interference(p.p1, p.p2);
        Self {
            samples,
            seed,
            interference_seed: seed ^ 0x5eed_1f7e_7fe7_e5ce,
            interference: [InterferenceSpec::Gaussian { variance: q }, InterferenceSpec::Gaussian { variance: q }],
            messages: MessageMode::Uniform,
            noise_variance: None,
        }
    }
}

/// One channel use.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Draw {
    pub v: [f64; 2],
    pub d: [f64; 2],
    pub x: [f64; 2],
    /// Channel noise.
    pub z: f64,
    pub y: f64,
    /// Receiver front-end output.
    pub yp: f64,
}

/// Samples of one stage's modulo channel.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSamples {
    /// Stage output `[S + W] mod Λ`.
    pub output: Vec<f64>,
    /// Equivalent noise `[W] mod Λ`.
    pub noise: Vec<f64>,
    /// Cell length of the wrapping lattice.
    pub wrap: f64,
    /// Empirical transmit power of each user, when the samples come from the
    /// full chain.
    pub power: Option<[f64; 2]>,
}

pub(crate) fn scale_of(l: &Lattice) -> Result<f64, SchemeError> {
    l.scale().ok_or(SchemeError::NotOneDimensional)
}

/// Point `j` of an `M`-PAM constellation in the cell `ΔZ`.
pub(crate) fn pam_point(j: usize, levels: usize, delta: f64) -> f64 {
    (2.0 * j as f64 + 1.0 - levels as f64) / (2.0 * levels as f64) * delta
}

/// Nearest `M`-PAM index to `x`, with distance measured around the cell.
pub(crate) fn pam_index(x: f64, levels: usize, delta: f64) -> usize {
    let m = levels as f64;
    let j = (Lattice::mod_scalar(delta, x) / delta * m + (m - 1.0) / 2.0).round();
    (j as i64).rem_euclid(levels as i64) as usize
}

/// Runs the full chain and maps every channel use through `f`, returning the
/// mapped values in order together with each user's mean square input.
pub(crate) fn run_chain<T: Send>(
    cfg: &SchemeConfig,
    req: &SimRequest,
    f: impl Fn(&Draw) -> T + Sync,
) -> Result<(Vec<T>, [f64; 2]), SchemeError> {
    let deltas = [scale_of(&cfg.lattices[0])?, scale_of(&cfg.lattices[1])?];
    let dr = scale_of(&cfg.receiver)?;
    let n = req.samples;
    for s in &req.interference {
        s.validate(n)?;
    }
    if let MessageMode::Fixed(v) = req.messages {
        for i in 0..2 {
            if cfg.carries_message[i] && (v[i].is_nan() || v[i].abs() > deltas[i] / 2.0) {
                return Err(SchemeError::MessageOutsideCell);
            }
        }
    }
    if let MessageMode::Pam { levels: 0 } = req.messages {
        return Err(SchemeError::Invariant("PAM needs at least one level".into()));
    }
    let sigma = req.noise_variance.unwrap_or(cfg.powers.n).sqrt();
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<(Vec<T>, [f64; 2])> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
            rng.set_stream(c as u64);
            let mut irng = ChaCha8Rng::seed_from_u64(req.interference_seed);
            irng.set_stream(c as u64);
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n);
            let mut out = Vec::with_capacity(end - start);
            let mut power = [0.0; 2];
            for i in start..end {
                let mut v = [0.0; 2];
                let mut d = [0.0; 2];
                for u in 0..2 {
                    let r: f64 = rng.gen();
                    if cfg.carries_message[u] {
                        v[u] = match req.messages {
                            MessageMode::Uniform => deltas[u] * (0.5 - r),
                            MessageMode::Fixed(fixed) => fixed[u],
                            MessageMode::Pam { levels } => {
                                pam_point(((r * levels as f64) as usize).min(levels - 1), levels, deltas[u])
                            }
                        };
                    }
                }
                for u in 0..2 {
                    let r: f64 = rng.gen();
                    if cfg.dithered[u] {
                        d[u] = deltas[u] * (r - 0.5);
                    }
                }
                let z = sigma * rng.sample::<f64, _>(StandardNormal);
                let s1 = req.interference[0].sample_at(i, n, &mut irng);
                let s2 = req.interference[1].sample_at(i, n, &mut irng);
                let (state, enc_state) = match cfg.channel {
                    ChannelKind::DoublyDirty => (s1 + s2, [s1, s2]),
                    ChannelKind::SingleDirty => (s1, [s1, 0.0]),
                    ChannelKind::Common => (s1, [s1, s1]),
                    ChannelKind::KUser(_) => unreachable!("two-user presets only"),
                };
                let mut x = [0.0; 2];
                for u in 0..2 {
                    x[u] = Lattice::mod_scalar(deltas[u], v[u] - cfg.state_gain[u] * enc_state[u] + d[u]);
                    power[u] += x[u] * x[u];
                }
                let y = x[0] + x[1] + state + z;
                let yp = Lattice::mod_scalar(dr, cfg.alpha_r * y - cfg.gamma * d[0] - cfg.beta * d[1]);
                out.push(f(&Draw { v, d, x, z, y, yp }));
            }
            (out, power)
        })
        .collect();
    let mut all = Vec::with_capacity(n);
    let mut power = [0.0; 2];
    for (part, p) in parts {
        all.extend(part);
        power[0] += p[0];
        power[1] += p[1];
    }
    let denom = n.max(1) as f64;
    Ok((all, [power[0] / denom, power[1] / denom]))
}

/// `[Y′ − V₁] mod Λ₁` as it is when the residual stays inside the cell:
/// `α₁(X₂ + Z) − (1 − α₁)X₁`. Both two-stage receivers use `γ = 1`, `β = 0`
/// and wrap on `Λ₁`, which is what makes this identity hold.
pub(crate) fn stage_one_residual(s: &Draw, a1: f64) -> f64 {
    a1 * (s.x[1] + s.z) - (1.0 - a1) * s.x[0]
}

/// Output and equivalent noise of stage `index`.
///
/// Later stages are genie aided: the decoder is handed `V₁` and the
/// unwrapped stage I residual. With long lattice codes the residual stays
/// in the cell with high probability; on one-dimensional lattices it
/// overloads noticeably at low SNR, which
/// [`decode_common_three_stage`](super::decode_common_three_stage) reports.
pub fn simulate_stage(preset: &Preset, index: usize, req: &SimRequest) -> Result<StageSamples, SchemeError> {
    let stage = preset.stages.get(index).ok_or(SchemeError::NoSuchStage(index))?;
    let cfg = &preset.cfg;
    let [w1, w2] = stage.signal_weights;
    let d2 = scale_of(&cfg.lattices[1])?;
    let wrap = scale_of(&stage.spec.wrap)?;
    let (a1, a2) = (cfg.alpha1, cfg.alpha2);
    let (pairs, power) = match &stage.path {
        StagePath::FrontEnd => run_chain(cfg, req, |s| {
            let sig = w1 * s.v[0] + w2 * s.v[1];
            (s.yp, Lattice::mod_scalar(wrap, s.yp - sig))
        })?,
        StagePath::GenieSecond { .. } => run_chain(cfg, req, |s| {
            let out = Lattice::mod_scalar(wrap, stage_one_residual(s, a1));
            (out, Lattice::mod_scalar(wrap, out - w1 * s.v[0] - w2 * s.v[1]))
        })?,
        StagePath::CommonStageThree => {
            let comb = cfg.combiner.ok_or_else(|| SchemeError::Invariant("stage III needs a combiner".into()))?;
            run_chain(cfg, req, |s| {
                let ytilde = (1.0 - a1) * (s.y + comb * stage_one_residual(s, a1));
                let out = Lattice::mod_scalar(d2, a2 * ytilde - s.d[1]);
                (out, Lattice::mod_scalar(wrap, out - s.v[1]))
            })?
        }
    };
    let (output, noise) = pairs.into_iter().unzip();
    Ok(StageSamples { output, noise, wrap, power: Some(power) })
}

/// Draws directly from the independent-sum description `[S + W] mod Λ`.
pub fn simulate_equivalent(spec: &EquivNoiseSpec, samples: usize, seed: u64) -> Result<StageSamples, SchemeError> {
    let wrap = scale_of(&spec.wrap)?;
    let draw = |c: &Component, rng: &mut ChaCha8Rng| match *c {
        Component::Uniform { cell, weight } => cell * weight * (rng.gen::<f64>() - 0.5),
        Component::Gaussian { variance } => variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
    };
    let parts: Vec<Vec<(f64, f64)>> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len)
                .map(|_| {
                    let s: f64 = spec.signal.iter().map(|c| draw(c, &mut rng)).sum();
                    let w: f64 = spec.noise.iter().map(|c| draw(c, &mut rng)).sum();
                    (Lattice::mod_scalar(wrap, s + w), Lattice::mod_scalar(wrap, w))
                })
                .collect()
        })
        .collect();
    let (output, noise) = parts.into_iter().flatten().unzip();
    Ok(StageSamples { output, noise, wrap, power: None })
}
