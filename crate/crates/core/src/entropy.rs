//! One-dimensional densities on a uniform grid, circular wrapping, and
//! differential entropy.
//!
//! Every grid places bin centres at integer multiples of the bin width `h`,
//! so densities built independently can be convolved without resampling and a
//! wrap onto a period of `M` bins only needs the bin index modulo `M`. A
//! wrapped density stores the bins with centres `kh` for `k ∈ [−M/2, M/2)`;
//! the first bin straddles the cell boundary, which is harmless on the circle.

use std::f64::consts::{LN_2, SQRT_2};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::schemes::{Component, EquivNoiseSpec};

/// Bins per wrap period used by [`rate_of_spec`] unless overridden.
pub const DEFAULT_BINS: usize = 1 << 14;

/// Gaussian truncation in standard deviations.
pub const DEFAULT_TRUNCATION: f64 = 8.0;

/// Minimum sample count accepted by [`mc_entropy`].
pub const MIN_MC_SAMPLES: usize = 100_000;

const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("{0} must be strictly positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("bin widths differ: {0} vs {1}")]
    GridMismatch(f64, f64),
    #[error("period {period} is not a whole number of bins of width {h}")]
    PeriodNotMultiple { period: f64, h: f64 },
    #[error("density is not normalized: total mass {0}")]
    Unnormalized(f64),
    #[error("density is already wrapped")]
    AlreadyWrapped,
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("support is empty or non-finite")]
    BadSupport,
    #[error("wrap lattice must be one-dimensional")]
    NotOneDimensional,
}

/// Probability masses on bins of width `h` centred at `(start + i)·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    h: f64,
    start: i64,
    mass: Vec<f64>,
    /// Bins per period once wrapped.
    period_bins: Option<usize>,
}

/// `P(lo ≤ X < hi)` for `X ~ N(0, σ²)`, accurate in both tails.
fn normal_mass(lo: f64, hi: f64, sigma: f64) -> f64 {
    let a = lo / (sigma * SQRT_2);
    let b = hi / (sigma * SQRT_2);
    if a >= 0.0 {
        0.5 * (erfc(a) - erfc(b))
    } else if b <= 0.0 {
        0.5 * (erfc(-b) - erfc(-a))
    } else {
        1.0 - 0.5 * (erfc(-a) + erfc(b))
    }
}

/// Length of `[a, b) ∩ [c, d)`.
#[inline]
fn overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (b.min(d) - a.max(c)).max(0.0)
}

fn positive(name: &'static str, v: f64) -> Result<(), EntropyError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(EntropyError::NonPositive(name, v))
    }
}

/// Calls `f(k, m)` with the mass `m` of every bin `k` hit by `U(−w/2, w/2)`.
fn uniform_bins(width: f64, h: f64, mut f: impl FnMut(i64, f64)) {
    let half = width / 2.0;
    let kmax = (half / h + 0.5).ceil() as i64;
    for k in -kmax..=kmax {
        let c = k as f64 * h;
        let m = overlap(c - h / 2.0, c + h / 2.0, -half, half) / width;
        if m > 0.0 {
            f(k, m);
        }
    }
}

/// Calls `f(k, m)` for the bins of `N(0, σ²)` truncated at `±trunc·σ`,
/// masses renormalized to one.
fn gaussian_bins(sigma: f64, h: f64, trunc: f64, mut f: impl FnMut(i64, f64)) {
    let kmax = (trunc * sigma / h).ceil() as i64;
    let masses: Vec<f64> = (-kmax..=kmax)
        .map(|k| {
            let c = k as f64 * h;
            normal_mass(c - h / 2.0, c + h / 2.0, sigma)
        })
        .collect();
    let total: f64 = masses.iter().sum();
    for (k, m) in (-kmax..=kmax).zip(masses) {
        f(k, m / total);
    }
}

fn fft_circular(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa.iter().map(|c| c.re / n as f64).collect()
}

/// Clamps round-off negatives from the FFT and restores unit mass.
fn clean(mass: &mut [f64]) {
    let mut total = 0.0;
    for m in mass.iter_mut() {
        if *m < 0.0 {
            *m = 0.0;
        }
        total += *m;
    }
    for m in mass.iter_mut() {
        *m /= total;
    }
}

impl GridDensity {
    /// `U(−w/2, w/2)` on bins of width `h`.
    pub fn uniform(width: f64, h: f64) -> Result<Self, EntropyError> {
        positive("width", width)?;
        positive("bin width", h)?;
        let kmax = (width / 2.0 / h + 0.5).ceil() as i64;
        let mut mass = vec![0.0; (2 * kmax + 1) as usize];
        uniform_bins(width, h, |k, m| mass[(k + kmax) as usize] += m);
        Ok(Self { h, start: -kmax, mass, period_bins: None })
    }

    /// `N(0, σ²)` truncated at `±8σ` and renormalized.
    pub fn gaussian(sigma: f64, h: f64) -> Result<Self, EntropyError> {
        Self::gaussian_truncated(sigma, h, DEFAULT_TRUNCATION)
    }

    pub fn gaussian_truncated(sigma: f64, h: f64, trunc: f64) -> Result<Self, EntropyError> {
        positive("sigma", sigma)?;
        positive("bin width", h)?;
        positive("truncation", trunc)?;
        let kmax = (trunc * sigma / h).ceil() as i64;
        let mut mass = Vec::with_capacity((2 * kmax + 1) as usize);
        gaussian_bins(sigma, h, trunc, |_, m| mass.push(m));
        Ok(Self { h, start: -kmax, mass, period_bins: None })
    }

    /// A point mass at the origin.
    pub fn point(h: f64) -> Result<Self, EntropyError> {
        positive("bin width", h)?;
        Ok(Self { h, start: 0, mass: vec![1.0], period_bins: None })
    }

    /// Uniform density on a circle of `bins` bins of width `h`.
    pub fn wrapped_uniform(bins: usize, h: f64) -> Self {
        let half = (bins / 2) as i64;
        Self { h, start: -half, mass: vec![1.0 / bins as f64; bins], period_bins: Some(bins) }
    }

    /// Folds a component straight onto a circle without materializing the
    /// unwrapped grid, which matters for components much wider than a period.
    fn folded(bins: usize, h: f64, emit: impl FnOnce(&mut dyn FnMut(i64, f64))) -> Self {
        let half = (bins / 2) as i64;
        let m = bins as i64;
        let mut mass = vec![0.0; bins];
        let mut add = |k: i64, p: f64| mass[(k + half).rem_euclid(m) as usize] += p;
        emit(&mut add);
        Self { h, start: -half, mass, period_bins: Some(bins) }
    }

    pub fn bin_width(&self) -> f64 {
        self.h
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn is_wrapped(&self) -> bool {
        self.period_bins.is_some()
    }

    /// Wrap period, if wrapped.
    pub fn period(&self) -> Option<f64> {
        self.period_bins.map(|m| m as f64 * self.h)
    }

    /// Centre of bin `i`.
    pub fn center(&self, i: usize) -> f64 {
        (self.start + i as i64) as f64 * self.h
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(i, m)| m * self.center(i)).sum()
    }

    /// Variance of the binned distribution (bins treated as point masses).
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.mass.iter().enumerate().map(|(i, m)| m * (self.center(i) - mu).powi(2)).sum()
    }

    /// Mass-preserving convolution. Wrapped operands must share the period;
    /// an unwrapped operand is folded onto the other's period first.
    pub fn convolve(&self, other: &Self) -> Result<Self, EntropyError> {
        if (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(EntropyError::GridMismatch(self.h, other.h));
        }
        match (self.period_bins, other.period_bins) {
            (Some(a), Some(b)) if a != b => Err(EntropyError::PeriodNotMultiple {
                period: b as f64 * other.h,
                h: self.h,
            }),
            (Some(m), _) | (_, Some(m)) => {
                let a = self.fold(m);
                let b = other.fold(m);
                let raw = fft_circular(&a.mass, &b.mass);
                // Output bin r holds index a.start + b.start + r, which must be
                // rotated back to the layout starting at a.start.
                let shift = (b.start).rem_euclid(m as i64) as usize;
                let mut mass = vec![0.0; m];
                for (r, p) in raw.into_iter().enumerate() {
                    mass[(r + shift) % m] = p;
                }
                clean(&mut mass);
                Ok(Self { h: self.h, start: a.start, mass, period_bins: Some(m) })
            }
            (None, None) => {
                let mut mass = linear_convolution(&self.mass, &other.mass);
                clean(&mut mass);
                Ok(Self { h: self.h, start: self.start + other.start, mass, period_bins: None })
            }
        }
    }

    fn fold(&self, bins: usize) -> Self {
        if self.period_bins == Some(bins) {
            return self.clone();
        }
        let half = (bins / 2) as i64;
        let m = bins as i64;
        let mut mass = vec![0.0; bins];
        for (i, p) in self.mass.iter().enumerate() {
            let k = self.start + i as i64;
            mass[(k + half).rem_euclid(m) as usize] += p;
        }
        Self { h: self.h, start: -half, mass, period_bins: Some(bins) }
    }

    /// Folds the mass modulo `period` onto `[−period/2, period/2)`.
    pub fn wrap(&self, period: f64) -> Result<Self, EntropyError> {
        positive("period", period)?;
        if self.period_bins.is_some() {
            return Err(EntropyError::AlreadyWrapped);
        }
        let ratio = period / self.h;
        let bins = ratio.round();
        if (ratio - bins).abs() > 1e-6 || bins < 1.0 {
            return Err(EntropyError::PeriodNotMultiple { period, h: self.h });
        }
        Ok(self.fold(bins as usize))
    }

    /// Total variation distance to another density on the same grid.
    pub fn total_variation(&self, other: &Self) -> Result<f64, EntropyError> {
        if (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(EntropyError::GridMismatch(self.h, other.h));
        }
        let lo = self.start.min(other.start);
        let hi = (self.start + self.mass.len() as i64).max(other.start + other.mass.len() as i64);
        let get = |d: &Self, k: i64| {
            let i = k - d.start;
            if i >= 0 && (i as usize) < d.mass.len() {
                d.mass[i as usize]
            } else {
                0.0
            }
        };
        Ok(0.5 * (lo..hi).map(|k| (get(self, k) - get(other, k)).abs()).sum::<f64>())
    }

    /// CDF of a wrapped density on `[−L/2, L/2)`, treating mass as spread
    /// evenly within each bin. The straddling first bin contributes half its
    /// mass at each end of the cell.
    pub fn wrapped_cdf(&self, x: f64) -> f64 {
        let Some(bins) = self.period_bins else {
            return self.linear_cdf(x);
        };
        let h = self.h;
        let half_l = bins as f64 * h / 2.0;
        let x = x.clamp(-half_l, half_l);
        let mut acc = self.mass[0] * overlap(-half_l, -half_l + h / 2.0, -half_l, x) / h
            + self.mass[0] * overlap(half_l - h / 2.0, half_l, -half_l, x) / h;
        let rel = (x + half_l) / h;
        let full = ((rel - 0.5).floor().max(0.0) as usize).min(bins - 1);
        acc += self.mass[1..=full.min(bins - 1)].iter().sum::<f64>();
        if full + 1 < bins {
            let c = self.center(full + 1);
            acc += self.mass[full + 1] * overlap(c - h / 2.0, c + h / 2.0, -half_l, x) / h;
        }
        acc
    }

    fn linear_cdf(&self, x: f64) -> f64 {
        let h = self.h;
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let c = self.center(i);
                m * (overlap(c - h / 2.0, c + h / 2.0, f64::NEG_INFINITY, x) / h)
            })
            .sum()
    }
}

fn linear_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 64 {
        let mut out = vec![0.0; n];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let size = n.next_power_of_two();
    let mut pa = a.to_vec();
    pa.resize(size, 0.0);
    let mut pb = b.to_vec();
    pb.resize(size, 0.0);
    let mut out = fft_circular(&pa, &pb);
    out.truncate(n);
    out
}

/// Differential entropy `−Σ pᵢ log₂(pᵢ/h)` in bits.
pub fn diff_entropy(d: &GridDensity) -> Result<f64, EntropyError> {
    let total = d.total_mass();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(EntropyError::Unnormalized(total));
    }
    Ok(-d.mass.iter().filter(|&&p| p > 0.0).map(|&p| p * (p / d.h).log2()).sum::<f64>())
}

/// Wrapped density of one component on a circle of `bins` bins of width `h`.
pub fn component_density(c: &Component, bins: usize, h: f64) -> GridDensity {
    match *c {
        Component::Uniform { cell, weight } => {
            let w = (cell * weight).abs();
            if w == 0.0 {
                GridDensity::point(h).expect("h validated").fold(bins)
            } else {
                GridDensity::folded(bins, h, |add| uniform_bins(w, h, add))
            }
        }
        Component::Gaussian { variance } => {
            if variance == 0.0 {
                GridDensity::point(h).expect("h validated").fold(bins)
            } else {
                GridDensity::folded(bins, h, |add| {
                    gaussian_bins(variance.sqrt(), h, DEFAULT_TRUNCATION, add)
                })
            }
        }
    }
}

/// Unwrapped density of one component on bins of width `h`.
fn component_linear(c: &Component, h: f64) -> GridDensity {
    match *c {
        Component::Uniform { cell, weight } if cell * weight != 0.0 => {
            GridDensity::uniform((cell * weight).abs(), h).expect("validated component")
        }
        Component::Gaussian { variance } if variance > 0.0 => {
            GridDensity::gaussian(variance.sqrt(), h).expect("validated component")
        }
        _ => GridDensity::point(h).expect("h validated"),
    }
}

/// Wrapped density of the independent sum of `comps`.
pub fn wrapped_sum(comps: &[Component], bins: usize, h: f64) -> GridDensity {
    let mut acc: Option<GridDensity> = None;
    for c in comps {
        let d = component_density(c, bins, h);
        acc = Some(match acc {
            None => d,
            Some(a) => a.convolve(&d).expect("same grid"),
        });
    }
    acc.unwrap_or_else(|| GridDensity::point(h).expect("h validated").fold(bins))
}

/// Numerical settings for [`rate_of_spec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub bins: usize,
    /// Also evaluate the unwrapped noise entropy (linear convolution).
    pub unwrapped_check: bool,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { bins: DEFAULT_BINS, unwrapped_check: true }
    }
}

/// Outcome of a numerical rate evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEvaluation {
    /// `h(Y′) − h(Z_eq)` before clamping.
    pub raw: f64,
    /// `[raw]⁺`.
    pub rate: f64,
    pub clamped: bool,
    /// Entropy of the wrapped output `[signal + noise] mod Λ_r`.
    pub h_output: f64,
    /// Entropy of the wrapped noise `[noise] mod Λ_r`.
    pub h_noise: f64,
    /// Entropy of the unwrapped noise sum, when requested.
    pub h_noise_unwrapped: Option<f64>,
    /// The noise is too narrow for the grid to resolve, so the rate only
    /// reflects the grid resolution.
    pub grid_limited: bool,
}

/// Information rate `h([S + W] mod Δ_r) − h([W] mod Δ_r)` of a one-dimensional
/// modulo channel with signal components `S` and noise components `W`.
pub fn rate_of_spec(spec: &EquivNoiseSpec, settings: GridSettings) -> Result<RateEvaluation, EntropyError> {
    let l = spec.wrap.scale().ok_or(EntropyError::NotOneDimensional)?;
    let bins = settings.bins;
    let h = l / bins as f64;
    let noise = wrapped_sum(&spec.noise, bins, h);
    let h_noise = diff_entropy(&noise)?;
    let h_output = if spec.signal_fills_cell() {
        l.log2()
    } else {
        let mut out = noise.clone();
        for c in &spec.signal {
            out = out.convolve(&component_density(c, bins, h))?;
        }
        diff_entropy(&out)?
    };
    let h_noise_unwrapped = if settings.unwrapped_check {
        let mut acc = GridDensity::point(h)?;
        for c in &spec.noise {
            acc = acc.convolve(&component_linear(c, h))?;
        }
        Some(diff_entropy(&acc)?)
    } else {
        None
    };
    let raw = h_output - h_noise;
    let grid_limited = spec.noise_variance().sqrt() < 4.0 * h;
    Ok(RateEvaluation {
        raw,
        rate: raw.max(0.0),
        clamped: raw < 0.0,
        h_output,
        h_noise,
        h_noise_unwrapped,
        grid_limited,
    })
}

/// Histogram plug-in entropy in bits with the Miller–Madow bias correction.
///
/// With `support = None` the histogram spans the sample range.
pub fn mc_entropy(samples: &[f64], bins: usize, support: Option<(f64, f64)>) -> Result<f64, EntropyError> {
    if samples.len() < MIN_MC_SAMPLES {
        return Err(EntropyError::TooFewSamples { min: MIN_MC_SAMPLES, got: samples.len() });
    }
    if bins == 0 {
        return Err(EntropyError::NonPositive("bins", 0.0));
    }
    let (lo, hi) = support.unwrap_or_else(|| {
        samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
    });
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(EntropyError::BadSupport);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let i = (((x - lo) / width) as isize).clamp(0, bins as isize - 1) as usize;
        counts[i] += 1;
    }
    let n = samples.len() as f64;
    let mut h = 0.0;
    let mut occupied = 0usize;
    for &c in &counts {
        if c > 0 {
            occupied += 1;
            let p = c as f64 / n;
            h -= p * p.log2();
        }
    }
    let correction = (occupied as f64 - 1.0) / (2.0 * n * LN_2);
    Ok(h + correction + width.log2())
}

/// `½log₂(2πeσ²)`.
pub fn gaussian_entropy(variance: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).log2()
}
