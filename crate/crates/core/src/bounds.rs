//! Closed-form outer and inner bounds, gaps and time-sharing constants.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{ChannelError, ChannelKind, KUserConfig, PowerConfig};
use crate::envelope::{golden_max, ray_envelope};
use crate::region::{HalfPlane, RatePair, Region};
use crate::roots::solve_roots;
use crate::schemes::shaping_loss_1d;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("{0}")]
    Condition(String),
    #[error("{0} must lie in [0, 1], got {1}")]
    OutOfRange(&'static str, f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// `C(x) = ½log₂(1 + x)`.
pub fn cap(x: f64) -> f64 {
    0.5 * x.ln_1p() / std::f64::consts::LN_2
}

fn checked(pc: &PowerConfig) -> Result<PowerConfig, BoundsError> {
    Ok(PowerConfig::new(pc.p1, pc.p2, pc.n)?)
}

fn scaled(pc: &PowerConfig, s: f64) -> PowerConfig {
    PowerConfig { p1: s * pc.p1, p2: s * pc.p2, n: pc.n }
}

/// `√(P₁P₂) − min(P₁, P₂)`, the noise level separating the two doubly
/// dirty regimes.
pub fn doubly_threshold(pc: &PowerConfig) -> f64 {
    (pc.p1 * pc.p2).sqrt() - pc.p_min()
}

/// `½log₂((P₁+P₂+N)/(2N + (√P₁ − √P₂)²))` before clamping.
pub fn thm4_raw(pc: PowerConfig) -> f64 {
    let d = pc.p1.sqrt() - pc.p2.sqrt();
    0.5 * ((pc.p1 + pc.p2 + pc.n) / (2.0 * pc.n + d * d)).log2()
}

/// `½log₂(1 + 4P₁P₂/((P₂ − P₁ + N)² + 4P₁N))`, the helper rate before
/// time sharing.
pub fn helper_inner_raw(pc: PowerConfig) -> f64 {
    let d = pc.p2 - pc.p1 + pc.n;
    cap(4.0 * pc.p1 * pc.p2 / (d * d + 4.0 * pc.p1 * pc.n))
}

pub fn outer_region(kind: ChannelKind, pc: &PowerConfig) -> Result<Region, BoundsError> {
    let pc = checked(pc)?;
    let min = cap(pc.p_min() / pc.n);
    Ok(match kind {
        ChannelKind::SingleDirty => Region::from_constraints(
            "single dirty outer",
            vec![HalfPlane::r2(min), HalfPlane::sum(cap(pc.p1 / pc.n))],
        ),
        ChannelKind::DoublyDirty => Region::from_constraints("doubly dirty outer", vec![HalfPlane::sum(min)]),
        ChannelKind::Common => common_interference_region(&pc)?,
        // Symmetric users of power P₁: the sum over all K users is bounded.
        ChannelKind::KUser(k) => {
            KUserConfig::new(k, pc.p1, pc.n)?;
            Region::from_constraints("k-user outer sum", vec![HalfPlane::sum(cap(pc.p1 / pc.n))])
        }
    })
}

/// Corner of the single dirty outer bound where user 2 runs at its
/// interference-free rate.
pub fn single_dirty_corner(pc: &PowerConfig) -> RatePair {
    RatePair::new(0.5 * ((pc.p1 + pc.n) / (pc.p2 + pc.n)).log2(), cap(pc.p2 / pc.n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DoublyMode {
    HighSnr,
    Thm3,
    Thm4,
    Symmetric,
    OneDim,
}

impl std::str::FromStr for DoublyMode {
    type Err = BoundsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "high_snr" => Self::HighSnr,
            "thm3" => Self::Thm3,
            "thm4" => Self::Thm4,
            "symmetric" => Self::Symmetric,
            "one_dim" => Self::OneDim,
            other => return Err(BoundsError::Condition(format!("unknown mode {other:?}"))),
        })
    }
}

/// Achievable sum rate of the doubly dirty MAC, with time sharing where the
/// mode includes it.
pub fn inner_doubly(pc: &PowerConfig, mode: DoublyMode) -> Result<f64, BoundsError> {
    let pc = checked(pc)?;
    let x = pc.p_min() / pc.n;
    Ok(match mode {
        DoublyMode::HighSnr => (0.5 * x.log2()).max(0.0),
        DoublyMode::Thm3 => {
            let t = doubly_threshold(&pc);
            if pc.n > t * (1.0 + 1e-12) {
                return Err(BoundsError::Condition(format!("N = {} exceeds √(P₁P₂) − min(P₁,P₂) = {t}", pc.n)));
            }
            cap(x)
        }
        DoublyMode::Thm4 => ray_envelope(|s| thm4_raw(scaled(&pc, s)).max(0.0)),
        DoublyMode::Symmetric => ray_envelope(|s| (0.5 * (0.5 + s * x).log2()).max(0.0)),
        DoublyMode::OneDim => {
            let loss = shaping_loss_1d();
            ray_envelope(|s| (0.5 * (0.5 + s * x).log2() - loss).max(0.0))
        }
    })
}

/// Gap between the doubly dirty outer bound and the best inner bound; zero
/// where the two meet.
pub fn gap_zeta(pc: &PowerConfig) -> Result<f64, BoundsError> {
    let pc = checked(pc)?;
    if pc.n <= doubly_threshold(&pc) {
        return Ok(0.0);
    }
    Ok((cap(pc.p_min() / pc.n) - inner_doubly(&pc, DoublyMode::Thm4)?).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapSupremum {
    pub gap: f64,
    /// `P/N` where the supremum is attained.
    pub snr: f64,
}

/// Largest doubly dirty gap, attained for equal powers at `P/N = x* − ½`.
pub fn zeta_supremum() -> (GapSupremum, f64) {
    let x = solve_roots().x_star;
    (GapSupremum { gap: (0.5 + x).log2() / (4.0 * x), snr: x - 0.5 }, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HelperRates {
    pub outer: f64,
    /// Best achievable rate, with time sharing.
    pub inner: f64,
    /// Set when inner and outer bounds coincide.
    pub capacity: Option<f64>,
    /// Achievable rate without time sharing.
    pub inner_raw: f64,
    /// The weaker closed-form lower bound `½log₂(1 + (min/N)(max/(P₁+N)))`.
    pub sandwich_lower: f64,
}

pub fn helper_rates(pc: &PowerConfig) -> Result<HelperRates, BoundsError> {
    let pc = checked(pc)?;
    let outer = cap(pc.p_min() / pc.n);
    let sandwich_lower = cap(pc.p_min() / pc.n * pc.p_max() / (pc.p1 + pc.n));
    if pc.n <= (pc.p1 - pc.p2).abs() {
        return Ok(HelperRates { outer, inner: outer, capacity: Some(outer), inner_raw: outer, sandwich_lower });
    }
    let inner = ray_envelope(|s| helper_inner_raw(scaled(&pc, s))).min(outer);
    Ok(HelperRates { outer, inner, capacity: None, inner_raw: helper_inner_raw(pc), sandwich_lower })
}

/// Gap between the helper outer bound and the time-shared inner bound,
/// defined where the two do not meet.
pub fn gap_eta(pc: &PowerConfig) -> Result<f64, BoundsError> {
    let pc = checked(pc)?;
    if (pc.p1 - pc.p2).abs() >= pc.n {
        return Err(BoundsError::Condition(format!("|P₁ − P₂| = {} ≥ N = {}", (pc.p1 - pc.p2).abs(), pc.n)));
    }
    let h = helper_rates(&pc)?;
    Ok((h.outer - h.inner).max(0.0))
}

/// Supremum of the helper gap before time sharing, which bounds the gap.
/// It is attained for equal powers at `P/N = ½`, where it equals
/// `½log₂(9/8)`.
pub fn eta_supremum() -> GapSupremum {
    let g = |x: f64| cap(x) - cap(4.0 * x * x / (4.0 * x + 1.0));
    let grid: Vec<f64> = (1..=2000).map(|i| i as f64 * 0.005).collect();
    let best = grid.iter().copied().fold(grid[0], |b, x| if g(x) > g(b) { x } else { b });
    let (snr, gap) = golden_max(g, best - 0.005, best + 0.005);
    GapSupremum { gap, snr }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timeshare {
    /// Inverse duty cycle `δ`.
    pub delta: f64,
    /// Rate of user 2.
    pub rate: f64,
    /// `rate / SNR`.
    pub slope: f64,
}

/// Equal-power helper scheme that is active a fraction `1/δ` of the time;
/// feasible while the optimal `δ` is at least 1.
pub fn helper_low_snr_timeshare(pc: &PowerConfig) -> Result<Timeshare, BoundsError> {
    let pc = checked(pc)?;
    if (pc.p1 - pc.p2).abs() > 1e-12 * pc.p_max() {
        return Err(BoundsError::Condition("time sharing needs P₁ = P₂".into()));
    }
    let x = pc.p1 / pc.n;
    let per_snr = |u: f64| (u * (1.0 + u)).log2() / (4.0 * u);
    let (u, slope) = golden_max(per_snr, 0.5, 10.0);
    if x > u {
        return Err(BoundsError::Condition(format!("SNR {x} exceeds the feasible limit {u}")));
    }
    Ok(Timeshare { delta: u / x, rate: slope * x, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleDirtyRegion {
    pub region: Region,
    /// Point at `α₁ = P₁/(P₁+N)`, on the sum-rate outer boundary.
    pub star: RatePair,
    /// Point at `α₁ = 1` when `P₂ + N < P₁`, user 2 at its clean rate.
    pub circ: Option<RatePair>,
    /// `P₁ ≤ P₂ − N`, where the region is the sum-rate triangle.
    pub sum_line_only: bool,
}

/// Rate pair of the two-stage single dirty scheme at scaling `α₁`.
pub fn lemma7_pair(pc: &PowerConfig, a: f64) -> RatePair {
    let (r1, r2) = crate::schemes::lemma7_rates(*pc, a);
    RatePair::new(r1.max(0.0), r2.max(0.0))
}

/// Convex hull of the two-stage rate pairs over `alphas` together with
/// user 1 transmitting alone at `C(P₁/N)`.
pub fn region_single_dirty(pc: &PowerConfig, alphas: &[f64]) -> Result<SingleDirtyRegion, BoundsError> {
    let pc = checked(pc)?;
    if let Some(&a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(BoundsError::OutOfRange("alpha1", a));
    }
    let star = lemma7_pair(&pc, pc.p1 / (pc.p1 + pc.n));
    let circ = (pc.p2 + pc.n < pc.p1).then(|| lemma7_pair(&pc, 1.0));
    let mut pts: Vec<RatePair> = alphas.iter().map(|&a| lemma7_pair(&pc, a)).collect();
    pts.push(star);
    pts.extend(circ);
    pts.push(RatePair::new(cap(pc.p1 / pc.n), 0.0));
    Ok(SingleDirtyRegion {
        region: Region::from_points("single dirty two-stage", &pts),
        star,
        circ,
        sum_line_only: pc.p1 <= pc.p2 - pc.n,
    })
}

/// Interference-free MAC pentagon.
pub fn common_interference_region(pc: &PowerConfig) -> Result<Region, BoundsError> {
    let pc = checked(pc)?;
    Ok(Region::from_constraints(
        "common interference",
        vec![
            HalfPlane::r1(cap(pc.p1 / pc.n)),
            HalfPlane::r2(cap(pc.p2 / pc.n)),
            HalfPlane::sum(cap((pc.p1 + pc.p2) / pc.n)),
        ],
    ))
}

/// `[h(S₁+S₂) − h(S₁) − h(S₂) − h(Z)]⁺` for Gaussian states and noise, the
/// limit of the random-binning sum rate under strong interference. The
/// input powers do not enter it.
pub fn binning_sum_bound(p1: f64, p2: f64, q1: f64, q2: f64, n: f64) -> Result<f64, BoundsError> {
    PowerConfig::new(p1, p2, n)?;
    PowerConfig::new(q1, q2, n)?;
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    Ok((0.5 * ((q1 + q2) / (two_pi_e * two_pi_e * q1 * q2 * n)).log2()).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KUserBounds {
    pub outer: f64,
    pub inner: f64,
    pub inner_raw: f64,
}

pub fn k_user_bounds(k: usize, p: f64, n: f64) -> Result<KUserBounds, BoundsError> {
    KUserConfig::new(k, p, n)?;
    let x = p / n;
    let inv = 1.0 / k as f64;
    Ok(KUserBounds {
        outer: cap(x),
        inner: ray_envelope(|s| (0.5 * (inv + s * x).log2()).max(0.0)),
        inner_raw: (0.5 * (inv + x).log2()).max(0.0),
    })
}
