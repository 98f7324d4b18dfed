//! Three-stage decoder for the common-interference channel.
//!
//! Stage I reads `V₁` off the front end `Y′ = [α₁Y − D₁] mod Λ₁`. Stage II
//! forms `Ẑ = [Y′ − V̂₁] mod Λ₁ = α₁(X₂ + Z) − (1 − α₁)X₁` and combines it with
//! the channel output into `Ỹ = (1 − α₁)(Y + Ẑ/(1 − α₁)) = X₂ + Z + (1 − α₁)S`.
//! Stage III is then an ordinary dirty-paper front end for user 2 on `Λ₂`.

use super::simulate::{pam_index, pam_point, run_chain, scale_of, stage_one_residual};
use super::{Family, MessageMode, Preset, SchemeError, SimRequest};
use crate::lattice::Lattice;

/// How stage I decides `V₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOneDecision {
    /// The decoder is handed the true `V₁`.
    Genie,
    /// Nearest point of an `M`-PAM constellation, measured around the cell.
    /// The request must then use `MessageMode::Pam` with the same order.
    Pam { levels: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommonDecode {
    pub samples: usize,
    /// Channel uses where `V̂₁ ≠ V₁`.
    pub stage_one_errors: usize,
    /// Mean of `Ẑ²`.
    pub residual_power: f64,
    /// Channel uses where the stage II residual left the cell of `Λ₁`, so
    /// that `Ẑ` differs from `α₁(X₂ + Z) − (1 − α₁)X₁`.
    pub overloads: usize,
    /// Stage III output `Y″`.
    pub stage_three: Vec<f64>,
    /// `[Y″ − V₂] mod Λ₂`.
    pub stage_three_noise: Vec<f64>,
}

pub fn decode_common_three_stage(
    preset: &Preset,
    req: &SimRequest,
    decision: StageOneDecision,
) -> Result<CommonDecode, SchemeError> {
    let cfg = &preset.cfg;
    if cfg.family != Family::Common {
        return Err(SchemeError::Invariant("three-stage decoding needs the common-interference preset".into()));
    }
    if let StageOneDecision::Pam { levels } = decision {
        if req.messages != (MessageMode::Pam { levels }) {
            return Err(SchemeError::Invariant("PAM decisions need PAM messages of the same order".into()));
        }
    }
    let comb = cfg.combiner.ok_or_else(|| SchemeError::Invariant("missing combiner".into()))?;
    let d1 = scale_of(&cfg.lattices[0])?;
    let d2 = scale_of(&cfg.lattices[1])?;
    let (a1, a2) = (cfg.alpha1, cfg.alpha2);
    let (rows, _) = run_chain(cfg, req, |s| {
        let v1_hat = match decision {
            StageOneDecision::Genie => s.v[0],
            StageOneDecision::Pam { levels } => pam_point(pam_index(s.yp, levels, d1), levels, d1),
        };
        let error = match decision {
            StageOneDecision::Genie => false,
            StageOneDecision::Pam { levels } => pam_index(s.v[0], levels, d1) != pam_index(v1_hat, levels, d1),
        };
        let zhat = Lattice::mod_scalar(d1, s.yp - v1_hat);
        let unwrapped = stage_one_residual(s, a1);
        let overload = (zhat - unwrapped).abs() > 1e-9 * d1;
        let ytilde = (1.0 - a1) * (s.y + comb * zhat);
        let out = Lattice::mod_scalar(d2, a2 * ytilde - s.d[1]);
        (error, overload, zhat * zhat, out, Lattice::mod_scalar(d2, out - s.v[1]))
    })?;
    let samples = rows.len();
    let mut stage_one_errors = 0;
    let mut residual = 0.0;
    let mut overloads = 0;
    let mut stage_three = Vec::with_capacity(samples);
    let mut stage_three_noise = Vec::with_capacity(samples);
    for (e, over, r, o, w) in rows {
        stage_one_errors += usize::from(e);
        overloads += usize::from(over);
        residual += r;
        stage_three.push(o);
        stage_three_noise.push(w);
    }
    Ok(CommonDecode {
        samples,
        stage_one_errors,
        residual_power: residual / samples.max(1) as f64,
        overloads,
        stage_three,
        stage_three_noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PowerConfig;
    use crate::schemes::{build_preset, simulate_stage, PresetKind};

    #[test]
    fn noiseless_pam_recovers_both_messages() {
        let p = PowerConfig::new(1.0, 0.01, 1e-9).unwrap();
        let pre = build_preset(&PresetKind::Common, p).unwrap();
        let mut req = SimRequest::new(10_000, 11, &pre);
        req.messages = MessageMode::Pam { levels: 4 };
        req.noise_variance = Some(0.0);
        let out = decode_common_three_stage(&pre, &req, StageOneDecision::Pam { levels: 4 }).unwrap();
        assert_eq!(out.stage_one_errors, 0);
        assert_eq!(out.overloads, 0);
        let worst = out.stage_three_noise.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let d2 = pre.cfg.lattices[1].scale().unwrap();
        assert!(worst <= (1.0 - pre.cfg.alpha2) * d2 / 2.0 + 1e-12, "{worst}");
    }

    #[test]
    fn residual_power_matches_prediction() {
        let p = PowerConfig::new(10.0, 1.0, 1.0).unwrap();
        let pre = build_preset(&PresetKind::Common, p).unwrap();
        let out = decode_common_three_stage(&pre, &SimRequest::new(200_000, 5, &pre), StageOneDecision::Genie).unwrap();
        let want = 10.0 * 2.0 / 12.0;
        assert!((out.residual_power / want - 1.0).abs() < 0.02, "{}", out.residual_power);
    }

    #[test]
    fn genie_decoder_matches_stage_simulation() {
        let p = PowerConfig::new(3.0, 2.0, 1.0).unwrap();
        let pre = build_preset(&PresetKind::Common, p).unwrap();
        let req = SimRequest::new(5_000, 8, &pre);
        let a = decode_common_three_stage(&pre, &req, StageOneDecision::Genie).unwrap();
        let b = simulate_stage(&pre, 1, &req).unwrap();
        let differ = a.stage_three.iter().zip(&b.output).filter(|(x, y)| (*x - *y).abs() > 1e-9).count();
        assert!(a.overloads > 0);
        assert!(differ <= a.overloads, "{differ} > {}", a.overloads);
    }

    #[test]
    fn rejects_other_presets_and_mismatched_messages() {
        let p = PowerConfig::new(3.0, 2.0, 1.0).unwrap();
        let pre = build_preset(&PresetKind::SymmetricMmse, p).unwrap();
        let req = SimRequest::new(10, 8, &pre);
        assert!(decode_common_three_stage(&pre, &req, StageOneDecision::Genie).is_err());
        let pre = build_preset(&PresetKind::Common, p).unwrap();
        assert!(decode_common_three_stage(&pre, &req, StageOneDecision::Pam { levels: 2 }).is_err());
    }
}
