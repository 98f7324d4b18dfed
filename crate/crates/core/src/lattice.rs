//! Lattices, nearest-point quantization, modulo reduction and dithering.
//!
//! A [`Lattice`] is either the scaled integer lattice `ΔZ` (the fast path used
//! by every simulated scheme) or a full-rank lattice given by an `n × n`
//! generator matrix whose columns are the basis vectors, so that lattice points
//! are `G·i` for integer vectors `i`.
//!
//! Nearest-point search for matrix lattices rounds the coordinates of
//! `G⁻¹x` and then searches the `3ⁿ` integer offsets around that point, which
//! restricts matrix lattices to `n ≤ 8`. Ties between equidistant lattice
//! points are resolved towards the lexicographically smallest integer
//! coordinate vector, so the fundamental Voronoi region is a well-defined set
//! and `x mod Λ` is a function of the coset `x + Λ` only.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

/// Largest dimension supported by the exhaustive neighbourhood search.
pub const MAX_MATRIX_DIM: usize = 8;

/// Tolerance used for nesting and idempotence checks.
pub const LATTICE_TOL: f64 = 1e-9;

/// Cap on the number of redraws when a dither sample fails the Voronoi check.
const DITHER_RETRY_CAP: usize = 64;

/// Lower bound `1/(2πe)` on the normalized second moment of any lattice.
pub fn sphere_bound() -> f64 {
    1.0 / (2.0 * PI * E)
}

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("dimension mismatch: lattice has dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input contains a non-finite coordinate")]
    NonFinite,
    #[error("generator matrix is singular or degenerate")]
    Singular,
    #[error("lattice scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("matrix lattices are limited to dimension {MAX_MATRIX_DIM}, got {0}")]
    TooLarge(usize),
    #[error("generator must have {expected} entries, got {got}")]
    BadGenerator { expected: usize, got: usize },
    #[error("dither rejection loop exceeded {0} attempts")]
    DitherCap(usize),
    #[error("second-moment estimation needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Basis {
    /// `ΔZ`.
    Scalar(f64),
    /// Column-major generator with its inverse.
    Matrix { g: DMatrix<f64>, g_inv: DMatrix<f64> },
}

/// A full-rank lattice in `Rⁿ`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    basis: Basis,
    volume: f64,
}

/// Nearest lattice point with its integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
    pub point: Vec<f64>,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Lattice {
    /// The one-dimensional lattice `ΔZ`.
    pub fn scalar(delta: f64) -> Result<Self, LatticeError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(LatticeError::BadScale(delta));
        }
        Ok(Self { dim: 1, basis: Basis::Scalar(delta), volume: delta })
    }

    /// `ΔZ` scaled so that its second moment equals `power` (`Δ = √(12·power)`).
    pub fn with_second_moment(power: f64) -> Result<Self, LatticeError> {
        if !(power.is_finite() && power > 0.0) {
            return Err(LatticeError::BadScale(power));
        }
        Self::scalar((12.0 * power).sqrt())
    }

    /// The integer lattice `Zⁿ` as a matrix lattice.
    pub fn integer(n: usize) -> Result<Self, LatticeError> {
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            g[i * n + i] = 1.0;
        }
        Self::from_generator(n, &g)
    }

    /// Lattice from a row-major `n × n` generator whose columns are the basis.
    pub fn from_generator(n: usize, rows: &[f64]) -> Result<Self, LatticeError> {
        if n == 0 {
            return Err(LatticeError::Singular);
        }
        if n > MAX_MATRIX_DIM {
            return Err(LatticeError::TooLarge(n));
        }
        if rows.len() != n * n {
            return Err(LatticeError::BadGenerator { expected: n * n, got: rows.len() });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::NonFinite);
        }
        let g = DMatrix::from_row_slice(n, n, rows);
        let det = g.determinant();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(LatticeError::Singular);
        }
        let g_inv = g.clone().try_inverse().ok_or(LatticeError::Singular)?;
        Ok(Self { dim: n, basis: Basis::Matrix { g, g_inv }, volume: det.abs() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cell volume `|det G|`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `Some(Δ)` for `ΔZ`.
    pub fn scale(&self) -> Option<f64> {
        match self.basis {
            Basis::Scalar(d) => Some(d),
            Basis::Matrix { .. } => None,
        }
    }

    /// Generator as a row-major vector (for `ΔZ`, `[Δ]`).
    pub fn generator(&self) -> Vec<f64> {
        match &self.basis {
            Basis::Scalar(d) => vec![*d],
            Basis::Matrix { g, .. } => {
                let n = self.dim;
                let mut out = Vec::with_capacity(n * n);
                for r in 0..n {
                    for c in 0..n {
                        out.push(g[(r, c)]);
                    }
                }
                out
            }
        }
    }

    /// `cΛ`.
    pub fn scaled(&self, c: f64) -> Result<Self, LatticeError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(LatticeError::BadScale(c));
        }
        match &self.basis {
            Basis::Scalar(d) => Self::scalar(c * d),
            Basis::Matrix { .. } => {
                let g: Vec<f64> = self.generator().iter().map(|v| v * c).collect();
                Self::from_generator(self.dim, &g)
            }
        }
    }

    /// Exact second moment per dimension where it is known in closed form.
    ///
    /// `Δ²/12` for `ΔZ`; for matrix lattices use
    /// [`estimate_second_moment`](Self::estimate_second_moment).
    pub fn second_moment(&self) -> Option<f64> {
        self.scale().map(|d| d * d / 12.0)
    }

    /// Exact normalized second moment where known (`1/12` for `ΔZ`).
    pub fn normalized_second_moment(&self) -> Option<f64> {
        self.scale().map(|_| 1.0 / 12.0)
    }

    fn check(&self, x: &[f64]) -> Result<(), LatticeError> {
        if x.len() != self.dim {
            return Err(LatticeError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::NonFinite);
        }
        Ok(())
    }

    /// Index `k` of the nearest point `kΔ` of `ΔZ`, ties going to the smaller `k`.
    #[inline]
    pub(crate) fn nearest_index_1d(delta: f64, x: f64) -> f64 {
        (x / delta - 0.5).ceil()
    }

    /// `x mod ΔZ` on the fast path, result in `(−Δ/2, Δ/2]`.
    #[inline]
    pub fn mod_scalar(delta: f64, x: f64) -> f64 {
        x - delta * Self::nearest_index_1d(delta, x)
    }

    /// Nearest lattice point `Q_Λ(x)`.
    pub fn nearest_point(&self, x: &[f64]) -> Result<LatticePoint, LatticeError> {
        self.check(x)?;
        match &self.basis {
            Basis::Scalar(d) => {
                let k = Self::nearest_index_1d(*d, x[0]);
                Ok(LatticePoint { coords: vec![k as i64], point: vec![k * d] })
            }
            Basis::Matrix { g, g_inv } => Ok(self.nearest_matrix(g, g_inv, x)),
        }
    }

    fn nearest_matrix(&self, g: &DMatrix<f64>, g_inv: &DMatrix<f64>, x: &[f64]) -> LatticePoint {
        let n = self.dim;
        let xv = nalgebra::DVector::from_column_slice(x);
        let center: Vec<i64> = (g_inv * &xv).iter().map(|c| c.round() as i64).collect();
        let mut best: Option<(f64, Vec<i64>, Vec<f64>)> = None;
        let total = 3usize.pow(n as u32);
        let mut cand = vec![0i64; n];
        for idx in 0..total {
            let mut r = idx;
            for c in cand.iter_mut().zip(&center) {
                *c.0 = c.1 + (r % 3) as i64 - 1;
                r /= 3;
            }
            let mut point = vec![0.0; n];
            for (row, p) in point.iter_mut().enumerate() {
                *p = (0..n).map(|col| g[(row, col)] * cand[col] as f64).sum();
            }
            let dist: f64 = point.iter().zip(x).map(|(p, xi)| (p - xi).powi(2)).sum();
            let better = match &best {
                None => true,
                Some((bd, bc, _)) => dist < *bd || (dist == *bd && cand < *bc),
            };
            if better {
                best = Some((dist, cand.clone(), point));
            }
        }
        let (_, coords, point) = best.expect("search space is nonempty");
        LatticePoint { coords, point }
    }

    /// `x mod Λ = x − Q_Λ(x)`, a point of the fundamental Voronoi region.
    pub fn mod_lattice(&self, x: &[f64]) -> Result<Vec<f64>, LatticeError> {
        if let Basis::Scalar(d) = self.basis {
            self.check(x)?;
            return Ok(vec![Self::mod_scalar(d, x[0])]);
        }
        let q = self.nearest_point(x)?;
        Ok(x.iter().zip(&q.point).map(|(a, b)| a - b).collect())
    }

    /// Whether `x` lies in the fundamental Voronoi region.
    pub fn in_voronoi(&self, x: &[f64]) -> Result<bool, LatticeError> {
        Ok(self.nearest_point(x)?.coords.iter().all(|&c| c == 0))
    }

    /// A dither uniform over the fundamental Voronoi region.
    ///
    /// In one dimension this is uniform on `[−Δ/2, Δ/2)`. Otherwise a point is
    /// drawn uniformly from the fundamental parallelepiped `G·[−½, ½)ⁿ` and
    /// reduced modulo the lattice, which maps the parallelepiped measure onto
    /// the Voronoi cell. A draw that fails the Voronoi membership check (a
    /// sign of a basis so skewed that the neighbourhood search misses the
    /// true nearest point) is redrawn, up to a fixed cap.
    pub fn sample_dither<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>, LatticeError> {
        match &self.basis {
            Basis::Scalar(d) => Ok(vec![d * (rng.gen::<f64>() - 0.5)]),
            Basis::Matrix { g, .. } => {
                let n = self.dim;
                for _ in 0..DITHER_RETRY_CAP {
                    let u = nalgebra::DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
                    let p: Vec<f64> = (g * u).iter().copied().collect();
                    let r = self.mod_lattice(&p)?;
                    if self.in_voronoi(&r)? {
                        return Ok(r);
                    }
                }
                Err(LatticeError::DitherCap(DITHER_RETRY_CAP))
            }
        }
    }

    /// Per-dimension second moment `(1/n)E‖U‖²` of `U ~ Unif(𝒱)`.
    ///
    /// Exact for `ΔZ` (zero standard error); Monte Carlo otherwise.
    pub fn estimate_second_moment<R: Rng + ?Sized>(
        &self,
        n_samples: usize,
        rng: &mut R,
    ) -> Result<Estimate, LatticeError> {
        if let Some(s) = self.second_moment() {
            return Ok(Estimate { value: s, std_err: 0.0 });
        }
        const MIN: usize = 10_000;
        if n_samples < MIN {
            return Err(LatticeError::TooFewSamples { min: MIN, got: n_samples });
        }
        let n = self.dim as f64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n_samples {
            let u = self.sample_dither(rng)?;
            let v = u.iter().map(|c| c * c).sum::<f64>() / n;
            sum += v;
            sum_sq += v * v;
        }
        let m = n_samples as f64;
        let mean = sum / m;
        let var = (sum_sq / m - mean * mean).max(0.0);
        Ok(Estimate { value: mean, std_err: (var / m).sqrt() })
    }

    /// Normalized second moment `σ²/V^{2/n}` from an estimated second moment.
    pub fn normalized_from(&self, second_moment: f64) -> f64 {
        second_moment / self.volume.powf(2.0 / self.dim as f64)
    }
}

/// How a coarse lattice sits inside a fine one.
#[derive(Debug, Clone, PartialEq)]
pub enum NestingWitness {
    /// `Λ_c = c·Λ_f` for an integer `c`.
    Scale(i64),
    /// `G_c = G_f·M` for an integer matrix `M` (row-major).
    Matrix(Vec<i64>),
}

/// Tests whether `coarse ⊆ fine`, returning the integer witness if so.
pub fn is_nested(coarse: &Lattice, fine: &Lattice) -> Result<Option<NestingWitness>, LatticeError> {
    if coarse.dim != fine.dim {
        return Err(LatticeError::DimensionMismatch { expected: fine.dim, got: coarse.dim });
    }
    if let (Some(dc), Some(df)) = (coarse.scale(), fine.scale()) {
        let ratio = dc / df;
        let r = ratio.round();
        return Ok(((ratio - r).abs() <= LATTICE_TOL && r >= 1.0).then_some(NestingWitness::Scale(r as i64)));
    }
    let n = fine.dim;
    let gf = DMatrix::from_row_slice(n, n, &fine.generator());
    let gc = DMatrix::from_row_slice(n, n, &coarse.generator());
    let gf_inv = gf.try_inverse().ok_or(LatticeError::Singular)?;
    let m = gf_inv * gc;
    let mut entries = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let v = m[(r, c)];
            if (v - v.round()).abs() > LATTICE_TOL {
                return Ok(None);
            }
            entries.push(v.round() as i64);
        }
    }
    let diag = entries[0];
    let scalar = (0..n).all(|r| (0..n).all(|c| entries[r * n + c] == if r == c { diag } else { 0 }));
    Ok(Some(if scalar && diag > 0 {
        NestingWitness::Scale(diag)
    } else {
        NestingWitness::Matrix(entries)
    }))
}

/// A verified coarse/fine lattice pair.
#[derive(Debug, Clone)]
pub struct NestedPair {
    pub coarse: Lattice,
    pub fine: Lattice,
    pub witness: NestingWitness,
}

impl NestedPair {
    /// Returns `None` when `coarse` is not a sublattice of `fine`.
    pub fn new(coarse: Lattice, fine: Lattice) -> Result<Option<Self>, LatticeError> {
        Ok(is_nested(&coarse, &fine)?.map(|witness| Self { coarse, fine, witness }))
    }
}
