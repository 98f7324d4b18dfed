//! Scalar root equations behind the tangency and time-sharing constants.

use serde::Serialize;

/// Residual bound every returned root satisfies.
pub const ROOT_TOL: f64 = 1e-9;

/// Bisection on a bracket with a sign change; returns the midpoint once the
/// residual is within [`ROOT_TOL`] or the bracket cannot shrink further.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "bracket [{lo}, {hi}] has no sign change");
    loop {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() < ROOT_TOL * 1e-3 || mid <= lo || mid >= hi {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

/// Residual of `x/(x + ½) = ln(x + ½)`.
pub fn tangency_residual(x: f64) -> f64 {
    x / (x + 0.5) - (x + 0.5).ln()
}

/// Residual of `1 + u/(1 + u) = ln(u + u²)`.
pub fn timeshare_residual(u: f64) -> f64 {
    1.0 + u / (1.0 + u) - (u + u * u).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Roots {
    /// Root of the tangency equation `x/(x + ½) = ln(x + ½)`.
    pub x_star: f64,
    /// Point where the chord from the origin touches `½log₂(½ + SNR)`. It
    /// solves the same equation as `x_star`.
    pub snr_star: f64,
    /// Optimal `δ·P/N` of the low-SNR helper time sharing.
    pub u_star: f64,
}

/// Solves all three equations on the bracket `[1, 3]`, which contains a
/// single sign change of each residual.
pub fn solve_roots() -> Roots {
    let x = bisect(tangency_residual, 1.0, 3.0);
    // The tangency condition f′(s) = f(s)/s for f(s) = ½log₂(½ + s).
    let snr = bisect(|s| 1.0 / (s + 0.5) - (s + 0.5).ln() / s, 1.0, 3.0);
    let u = bisect(timeshare_residual, 1.0, 3.0);
    Roots { x_star: x, snr_star: snr, u_star: u }
}
