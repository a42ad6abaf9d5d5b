//! Fourier denoising of irregularly sampled series.
//!
//! The forward transform evaluates `x̃_k = Σ_r x_r e^{-j2π w_r f_k}` on
//! integer frequencies. The backward transform is the minimum-norm
//! least-squares solution of `Φ x = x̃`, computed with a column-pivoted
//! Householder QR followed by a complete orthogonal decomposition when `Φ`
//! is rank deficient.
//!
//! For series on an integer grid the default frequency set has one frequency
//! per grid slot, which makes the columns of `Φ` orthogonal. The square
//! variant ([`FrequencyGrid::Observations`]) keeps one frequency per
//! observation; on gapped samplings its condition number easily reaches
//! 1e13, so an accurate round trip then needs [`crate::DoubleDouble`], and
//! thresholding is amplified by the same factor.

use std::io::Write;

use num_complex::Complex;
use thiserror::Error;

use crate::embedding::{dist, EmbeddingMatrix};
use crate::scalar::{sin_cos_turns, Scalar};
use crate::timeseries::{TimeSeries, TimeSeriesError};

#[derive(Debug, Error)]
pub enum DenoiseError {
    #[error("series needs at least two distinct time stamps")]
    DegenerateSpan,
    #[error("pseudo-inverse failed: {0}")]
    NumericalRankFailure(String),
    #[error("embeddings differ in shape or provenance")]
    ShapeMismatch,
    #[error("threshold must be nonnegative (got {0})")]
    NegativeThreshold(f64),
    #[error("keep fraction must lie in (0, 1] (got {0})")]
    InvalidFraction(f64),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
}

pub type Result<T> = std::result::Result<T, DenoiseError>;

/// Frequencies used by the forward transform of a gridded series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyGrid {
    /// `f_k = 0..N-1` for a grid of `N` slots.
    #[default]
    Slots,
    /// `f_k = 0..n-1` for `n` observations.
    Observations,
}

/// How sample positions `w_r` were derived; integer grids keep exact phases.
#[derive(Debug, Clone, PartialEq)]
enum Sampling {
    /// `w_r = offsets[r] / slots`.
    Grid { offsets: Vec<i64>, slots: i64 },
    Continuous,
}

/// Non-uniform DFT coefficients and their power spectral densities.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector<T> {
    pub coefficients: Vec<Complex<T>>,
    /// Sample positions in `[0, 1)`, one per observation.
    pub w: Vec<T>,
    /// One frequency per coefficient.
    pub f: Vec<T>,
    /// `|coefficient|² / n` with `n` the number of observations.
    pub psd: Vec<T>,
    sampling: Sampling,
}

impl<T: Scalar> SpectralVector<T> {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    fn refresh_psd(&mut self) {
        let n = T::of_usize(self.w.len());
        self.psd = self.coefficients.iter().map(|c| c.norm_sqr().quot(n)).collect();
    }

    /// `e^{-j2π w_r f_k}` as (cos, -sin).
    fn phase(&self, r: usize, k: usize) -> Complex<T> {
        let turns = match &self.sampling {
            Sampling::Grid { offsets, slots } => {
                let rem = (offsets[r] as i128 * k as i128).rem_euclid(*slots as i128);
                T::of(rem as f64).quot(T::of(*slots as f64))
            }
            Sampling::Continuous => self.w[r] * self.f[k],
        };
        let (s, c) = sin_cos_turns(turns);
        Complex::new(c, -s)
    }

    /// CSV with columns `f,re,im,psd`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "f,re,im,psd")?;
        for k in 0..self.len() {
            let c = self.coefficients[k];
            writeln!(
                out,
                "{:?},{:?},{:?},{:?}",
                self.f[k].to_f64_lossy(),
                c.re.to_f64_lossy(),
                c.im.to_f64_lossy(),
                self.psd[k].to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

/// Forward transform with the default frequency grid.
///
/// Integer-valued time stamps are treated as ticks of a grid with `span + 1`
/// slots; other times use the period `span · n/(n-1)` and `n` frequencies.
/// Every choice reduces to the ordinary DFT on a uniform sampling.
pub fn forward_nudft<T: Scalar>(ts: &TimeSeries<T>) -> Result<SpectralVector<T>> {
    forward_nudft_with(ts, FrequencyGrid::default())
}

pub fn forward_nudft_with<T: Scalar>(ts: &TimeSeries<T>, grid: FrequencyGrid) -> Result<SpectralVector<T>> {
    let n = ts.len();
    if n < 2 {
        return Err(DenoiseError::DegenerateSpan);
    }
    let times = ts.times();
    let on_grid = times
        .iter()
        .all(|&t| t == t.round() && t.abs() < T::of(9.0e15));
    if on_grid {
        let ticks: Vec<i64> = times.iter().map(|t| t.to_i64().unwrap_or(0)).collect();
        return forward_nudft_ticks(ts.values(), &ticks, grid);
    }
    let span = times[n - 1] - times[0];
    let period = (span * T::of_usize(n)).quot(T::of_usize(n - 1));
    let w = times.iter().map(|&t| (t - times[0]).quot(period)).collect();
    Ok(transform(ts.values(), w, n, Sampling::Continuous))
}

/// Forward transform for values observed at integer ticks of a grid.
pub fn forward_nudft_ticks<T: Scalar>(values: &[T], ticks: &[i64], grid: FrequencyGrid) -> Result<SpectralVector<T>> {
    let n = values.len();
    if n < 2 || ticks.len() != n || ticks[n - 1] == ticks[0] {
        return Err(DenoiseError::DegenerateSpan);
    }
    let slots = ticks[n - 1] - ticks[0] + 1;
    let offsets: Vec<i64> = ticks.iter().map(|&t| t - ticks[0]).collect();
    let w = offsets
        .iter()
        .map(|&o| T::of(o as f64).quot(T::of(slots as f64)))
        .collect();
    let freqs = match grid {
        FrequencyGrid::Slots => slots as usize,
        FrequencyGrid::Observations => n,
    };
    Ok(transform(values, w, freqs, Sampling::Grid { offsets, slots }))
}

fn transform<T: Scalar>(values: &[T], w: Vec<T>, freqs: usize, sampling: Sampling) -> SpectralVector<T> {
    let n = values.len();
    let mut sv = SpectralVector {
        coefficients: Vec::new(),
        w,
        f: (0..freqs).map(T::of_usize).collect(),
        psd: Vec::new(),
        sampling,
    };
    sv.coefficients = (0..freqs)
        .map(|k| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, r| {
                acc + sv.phase(r, k) * values[r]
            })
        })
        .collect();
    sv.refresh_psd();
    sv
}

/// Zeroes every coefficient whose PSD is below `threshold`.
pub fn threshold_psd<T: Scalar>(sv: &SpectralVector<T>, threshold: T) -> SpectralVector<T> {
    let mut out = sv.clone();
    for (c, &p) in out.coefficients.iter_mut().zip(&sv.psd) {
        if p < threshold {
            *c = Complex::new(T::zero(), T::zero());
        }
    }
    out.refresh_psd();
    out
}

/// Smallest PSD threshold whose surviving bins carry at least `fraction` of
/// the total PSD mass.
pub fn keep_fraction_threshold<T: Scalar>(sv: &SpectralVector<T>, fraction: T) -> Result<T> {
    if !(fraction > T::zero() && fraction <= T::one()) {
        return Err(DenoiseError::InvalidFraction(fraction.to_f64_lossy()));
    }
    let mut psd = sv.psd.clone();
    psd.sort_by(|a, b| crate::scalar::cmp_scalar(b, a));
    let total = psd.iter().fold(T::zero(), |a, &p| a + p);
    if total == T::zero() {
        return Ok(T::zero());
    }
    let mut acc = T::zero();
    for &p in &psd {
        acc += p;
        if acc >= fraction * total {
            return Ok(p);
        }
    }
    Ok(T::zero())
}

/// Minimum-norm least-squares inverse of the forward transform.
pub fn backward_pinv<T: Scalar>(sv: &SpectralVector<T>) -> Result<Vec<T>> {
    let n = sv.w.len();
    let zero = Complex::new(T::zero(), T::zero());
    if sv.coefficients.iter().all(|c| *c == zero) {
        return Ok(vec![T::zero(); n]);
    }
    // column r of Φ holds e^{-j2π w_r f_k} over k
    let cols: Vec<Vec<Complex<T>>> = (0..n)
        .map(|r| (0..sv.len()).map(|k| sv.phase(r, k)).collect())
        .collect();
    let x = min_norm_solve(cols, &sv.coefficients)?;
    Ok(x.into_iter().map(|c| c.re).collect())
}

/// Forward transform, PSD thresholding, pseudo-inverse. When no coefficient
/// falls below the threshold the input values are returned unchanged.
pub fn denoise<T: Scalar>(ts: &TimeSeries<T>, threshold: T) -> Result<TimeSeries<T>> {
    denoise_with(ts, threshold, FrequencyGrid::default())
}

/// [`denoise`] with an explicit frequency grid for gridded input.
pub fn denoise_with<T: Scalar>(ts: &TimeSeries<T>, threshold: T, grid: FrequencyGrid) -> Result<TimeSeries<T>> {
    if threshold < T::zero() || threshold.is_nan() {
        return Err(DenoiseError::NegativeThreshold(threshold.to_f64_lossy()));
    }
    let sv = forward_nudft_with(ts, grid)?;
    if sv.psd.iter().all(|&p| p >= threshold) {
        return Ok(ts.clone());
    }
    let values = backward_pinv(&threshold_psd(&sv, threshold))?;
    Ok(ts.with_values(values)?)
}

/// Supremum over aligned rows of the Euclidean distance between a noisy and
/// a clean embedding of the same sampling.
pub fn denoising_bound<T: Scalar>(noisy: &EmbeddingMatrix<T>, clean: &EmbeddingMatrix<T>) -> Result<T> {
    if noisy.rows() != clean.rows() || noisy.dim() != clean.dim() || noisy.provenance() != clean.provenance() {
        return Err(DenoiseError::ShapeMismatch);
    }
    Ok((0..noisy.rows())
        .map(|i| dist(noisy.row(i), clean.row(i)))
        .fold(T::zero(), T::max))
}

/// Multiplier `(4n - 2)/γ` of the bound with `γ = 1`.
pub fn bound_factor<T: Scalar>(n: usize) -> T {
    T::of_usize(4 * n) - T::of(2.0)
}

struct Reflector<T> {
    v: Vec<Complex<T>>,
    beta: T,
    start: usize,
}

impl<T: Scalar> Reflector<T> {
    /// Householder reflector mapping `x` onto a multiple of `e_0`.
    fn new(x: &[Complex<T>], start: usize) -> Self {
        let norm = x.iter().fold(T::zero(), |a, c| a + c.norm_sqr()).sqrt();
        let mut v = x.to_vec();
        if norm == T::zero() {
            return Self { v, beta: T::zero(), start };
        }
        let a0 = x[0].norm_sqr().sqrt();
        let alpha = if a0 == T::zero() {
            Complex::new(-norm, T::zero())
        } else {
            -scale(x[0], norm.quot(a0))
        };
        v[0] -= alpha;
        let vn = v.iter().fold(T::zero(), |a, c| a + c.norm_sqr());
        let beta = if vn == T::zero() { T::zero() } else { T::of(2.0).quot(vn) };
        Self { v, beta, start }
    }

    fn apply(&self, y: &mut [Complex<T>]) {
        if self.beta == T::zero() {
            return;
        }
        let tail = &mut y[self.start..];
        let dot = self
            .v
            .iter()
            .zip(tail.iter())
            .fold(Complex::new(T::zero(), T::zero()), |a, (v, y)| a + v.conj() * y);
        let s = dot * self.beta;
        for (y, v) in tail.iter_mut().zip(&self.v) {
            *y -= *v * s;
        }
    }
}

fn scale<T: Scalar>(z: Complex<T>, t: T) -> Complex<T> {
    Complex::new(z.re * t, z.im * t)
}

fn cdiv<T: Scalar>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    let p = a * b.conj();
    let d = b.norm_sqr();
    Complex::new(p.re.quot(d), p.im.quot(d))
}

/// Minimum-norm solution of `A x = b` for `A` given by columns.
fn min_norm_solve<T: Scalar>(mut cols: Vec<Vec<Complex<T>>>, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let n = cols.len();
    let m = b.len();
    let zero = Complex::new(T::zero(), T::zero());
    if cols.iter().flatten().chain(b).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(DenoiseError::NumericalRankFailure("non-finite input".into()));
    }
    let tol = T::of_usize(m.max(n)) * T::unit_roundoff();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors = Vec::new();
    let mut rank = 0;
    let mut r00 = T::zero();
    for k in 0..m.min(n) {
        let (p, _) = (k..n)
            .map(|j| (j, cols[j][k..].iter().fold(T::zero(), |a, c| a + c.norm_sqr())))
            .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        cols.swap(k, p);
        perm.swap(k, p);
        let h = Reflector::new(&cols[k][k..], k);
        for col in cols.iter_mut().skip(k) {
            h.apply(col);
        }
        reflectors.push(h);
        let rkk = cols[k][k].norm_sqr().sqrt();
        if k == 0 {
            r00 = rkk;
        }
        if rkk == T::zero() || rkk <= r00 * tol {
            break;
        }
        rank = k + 1;
    }
    if rank == 0 {
        return Err(DenoiseError::NumericalRankFailure("matrix is numerically zero".into()));
    }
    let mut c = b.to_vec();
    for h in &reflectors[..rank] {
        h.apply(&mut c);
    }
    let r = |i: usize, j: usize| cols[j][i];

    let y: Vec<Complex<T>> = if rank == n {
        let mut y = vec![zero; n];
        for i in (0..n).rev() {
            let s = ((i + 1)..n).fold(c[i], |a, j| a - r(i, j) * y[j]);
            y[i] = cdiv(s, r(i, i));
        }
        y
    } else {
        // [R11 R12] = S^H Z^H with Z from a QR of [R11 R12]^H
        let mut bcols: Vec<Vec<Complex<T>>> = (0..rank)
            .map(|i| (0..n).map(|j| if j < i { zero } else { r(i, j).conj() }).collect())
            .collect();
        let mut zs = Vec::with_capacity(rank);
        for k in 0..rank {
            let h = Reflector::new(&bcols[k][k..], k);
            for col in bcols.iter_mut().skip(k) {
                h.apply(col);
            }
            zs.push(h);
        }
        let s = |i: usize, j: usize| bcols[j][i];
        // S^H u = c, forward substitution
        let mut u = vec![zero; rank];
        for i in 0..rank {
            let acc = (0..i).fold(c[i], |a, j| a - s(j, i).conj() * u[j]);
            u[i] = cdiv(acc, s(i, i).conj());
        }
        let mut y = u;
        y.resize(n, zero);
        for h in zs.iter().rev() {
            h.apply(&mut y);
        }
        y
    };
    let mut x = vec![zero; n];
    for (j, &p) in perm.iter().enumerate() {
        x[p] = y[j];
    }
    if x.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(DenoiseError::NumericalRankFailure("non-finite solution".into()));
    }
    Ok(x)
}
