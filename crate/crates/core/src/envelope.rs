//! Upper concave envelopes, the hull that time sharing achieves.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvelopeError {
    #[error("envelope needs at least 3 grid points, got {0}")]
    TooFewPoints(usize),
    #[error("grid must be strictly increasing (index {0})")]
    Unsorted(usize),
    #[error("grid and values differ in length")]
    LengthMismatch,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// Samples of a function with its upper concave envelope on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFn {
    pub x: Vec<f64>,
    pub raw: Vec<f64>,
    pub hull: Vec<f64>,
}

impl EnvelopeFn {
    /// Hull interpolated linearly, clamped to the grid ends.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.hull[0];
        }
        if x >= self.x[n - 1] {
            return self.hull[n - 1];
        }
        let i = self.x.partition_point(|&g| g <= x) - 1;
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.hull[i] + t * (self.hull[i + 1] - self.hull[i])
    }
}

/// Upper concave envelope of the points `(x[i], f[i])` by a monotone chain.
pub fn uce(x: &[f64], f: &[f64]) -> Result<EnvelopeFn, EnvelopeError> {
    if x.len() != f.len() {
        return Err(EnvelopeError::LengthMismatch);
    }
    if x.len() < 3 {
        return Err(EnvelopeError::TooFewPoints(x.len()));
    }
    for i in 0..x.len() {
        if !x[i].is_finite() || !f[i].is_finite() {
            return Err(EnvelopeError::NonFinite(i));
        }
        if i > 0 && x[i] <= x[i - 1] {
            return Err(EnvelopeError::Unsorted(i));
        }
    }
    let mut chain: Vec<usize> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        while chain.len() >= 2 {
            let (a, b) = (chain[chain.len() - 2], chain[chain.len() - 1]);
            // Drop b when it lies on or below the chord from a to i.
            let cross = (x[b] - x[a]) * (f[i] - f[a]) - (f[b] - f[a]) * (x[i] - x[a]);
            if cross >= 0.0 {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(i);
    }
    let mut hull = vec![0.0; x.len()];
    for w in chain.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a..=b {
            let t = (x[i] - x[a]) / (x[b] - x[a]);
            hull[i] = f[a] + t * (f[b] - f[a]);
        }
    }
    // Vertices keep their exact raw values.
    for &i in &chain {
        hull[i] = f[i];
    }
    Ok(EnvelopeFn { x: x.to_vec(), raw: f.to_vec(), hull })
}

/// Decades of scaling covered on each side of the evaluation point.
const RAY_DECADES: f64 = 6.0;
const RAY_POINTS: usize = 2401;

/// Envelope at `s = 1` of `φ(s)` on `s ≥ 0` with `φ(0) = 0`.
///
/// `φ(s)` is a rate achieved with every power scaled by `s`. Transmitting a
/// fraction `λ` of the time at scaled powers keeps the average power and
/// yields `λφ(s₁) + (1−λ)φ(s₂)`, so the envelope is the achievable rate
/// with time sharing along the ray. The grid hull is refined by a
/// golden-section search for the steepest chord from the origin, which is
/// where the hull of the S-shaped rate curves here departs from `φ`.
pub fn ray_envelope(phi: impl Fn(f64) -> f64) -> f64 {
    let half = (RAY_POINTS - 1) / 2;
    let step = RAY_DECADES / half as f64;
    let mut xs = Vec::with_capacity(RAY_POINTS + 1);
    xs.push(0.0);
    xs.extend((0..RAY_POINTS).map(|i| 10f64.powf((i as f64 - half as f64) * step)));
    xs[half + 1] = 1.0;
    let fs: Vec<f64> = xs.iter().map(|&s| if s == 0.0 { 0.0 } else { phi(s) }).collect();
    let grid = uce(&xs, &fs).expect("ray grid is valid").hull[half + 1];

    let slope = |ln_s: f64| {
        let s = ln_s.exp();
        phi(s) / s
    };
    let (best, _) = xs[half + 1..]
        .iter()
        .zip(&fs[half + 1..])
        .map(|(s, f)| (s.ln(), f / s))
        .fold((0.0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    let width = step * std::f64::consts::LN_10;
    let (lo, hi) = ((best - width).max(0.0), best + width);
    let chord = golden_max(slope, lo, hi).1.max(slope(lo)).max(slope(hi));
    grid.max(chord).max(phi(1.0))
}

/// Golden-section maximization of a unimodal function, returning the
/// argmax and the maximum.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::solve_roots;

    #[test]
    fn concave_input_is_unchanged() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let f: Vec<f64> = x.iter().map(|v| (1.0 + v).ln()).collect();
        let e = uce(&x, &f).unwrap();
        assert_eq!(e.hull, e.raw);
    }

    #[test]
    fn hull_dominates_and_is_idempotent() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 / 20.0).collect();
        let f: Vec<f64> = x.iter().map(|v| (3.0 * v).sin() + 0.1 * v).collect();
        let e = uce(&x, &f).unwrap();
        assert!(e.hull.iter().zip(&f).all(|(h, r)| h >= r));
        let again = uce(&x, &e.hull).unwrap();
        for (a, b) in again.hull.iter().zip(&e.hull) {
            assert!((a - b).abs() < 1e-12);
        }
        for w in e.hull.windows(3).zip(x.windows(3)) {
            let (h, g) = w;
            let s1 = (h[1] - h[0]) / (g[1] - g[0]);
            let s2 = (h[2] - h[1]) / (g[2] - g[1]);
            assert!(s2 <= s1 + 1e-9);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(uce(&[0.0, 1.0], &[0.0, 1.0]), Err(EnvelopeError::TooFewPoints(2)));
        assert_eq!(uce(&[0.0, 2.0, 1.0], &[0.0; 3]), Err(EnvelopeError::Unsorted(2)));
        assert_eq!(uce(&[0.0, 1.0, 2.0], &[0.0; 2]), Err(EnvelopeError::LengthMismatch));
    }

    #[test]
    fn tangent_chord_for_half_plus_snr() {
        let f = |x: f64| (0.5 * (0.5 + x).log2()).max(0.0);
        let xs: Vec<f64> = (0..=40_000).map(|i| i as f64 * 1e-4).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let e = uce(&xs, &fs).unwrap();
        let xstar = solve_roots().x_star;
        let want = f(xstar) * 0.8 / xstar;
        assert!((e.eval(0.8) - want).abs() < 1e-6);
        assert!((e.eval(3.0) - f(3.0)).abs() < 1e-12);
        // Scaling power by s at P/N = 0.8 is the same curve.
        assert!((ray_envelope(|s| f(0.8 * s)) - want).abs() < 1e-10);
        assert!((ray_envelope(|s| f(3.0 * s)) - f(3.0)).abs() < 1e-12);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 1.0);
        assert!((x - 0.3).abs() < 1e-7 && (v - 2.0).abs() < 1e-12);
    }
}
