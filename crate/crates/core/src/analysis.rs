//! Quantities derived from embeddings: periodicity score, correlation
//! dimension, row-aligned stability kernels and the SSE-to-TDE convergence
//! probe.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::embedding::{self, dist, pointwise_center_scale_lossy, EmbeddingError, EmbeddingMatrix, SkippedBlock};
use crate::persistence::{bottleneck, vr_persistence, FiltrationParams, PersistenceDiagram, PersistenceError};
use crate::scalar::{cmp_scalar, Scalar};
use crate::simulate::{apply_missingness, derive_seed, GeneratorSpec, SimulateError};
use crate::subsequence::{extract_subsequences, SubsequenceError, SubsequenceSet};
use crate::timeseries::{TimeSeries, TimeSeriesError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no window survives pointwise normalization")]
    EmptyAfterNormalization,
    #[error("need at least {needed} points (got {got})")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all points coincide")]
    DegenerateCloud,
    #[error("only {points} scales fall in the fit range (need 5)")]
    InsufficientScaling { points: usize },
    #[error("clouds differ in shape ({left_rows}x{left_dim} vs {right_rows}x{right_dim})")]
    ShapeMismatch {
        left_rows: usize,
        left_dim: usize,
        right_rows: usize,
        right_dim: usize,
    },
    #[error("time stamp {index} is not an integer tick")]
    NonIntegerTimes { index: usize },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error(transparent)]
    Subsequence(#[from] SubsequenceError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicityResult {
    pub score: f64,
    /// (birth, death) of the most persistent H1 feature.
    pub best_feature: Option<(f64, f64)>,
    pub m: usize,
    pub tau_per_block: Vec<usize>,
    /// Windows dropped as flat before scoring.
    pub dropped_windows: usize,
}

/// Largest H1 persistence of the pointwise centered and scaled cloud, over
/// `√3` (the death value of a densely sampled unit-circle loop).
pub fn periodicity_score<T: Scalar>(e: &EmbeddingMatrix<T>) -> Result<PeriodicityResult> {
    let (normalized, kept) = pointwise_center_scale_lossy(e);
    if kept.is_empty() {
        return Err(AnalysisError::EmptyAfterNormalization);
    }
    let dgm = vr_persistence(&normalized, &FiltrationParams::up_to(1))?;
    let best = dgm.most_persistent(1);
    let score = best.map_or(T::zero(), |f| f.persistence() / T::of(3.0).sqrt());
    Ok(PeriodicityResult {
        score: score.to_f64_lossy(),
        best_feature: best.map(|f| (f.birth.to_f64_lossy(), f.death.to_f64_lossy())),
        m: e.delays(),
        tau_per_block: e.tau_per_block().to_vec(),
        dropped_windows: e.rows() - kept.len(),
    })
}

/// Scales at which the correlation sum is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonGrid<T> {
    /// `count` log-spaced scales from the 1st percentile to the maximum of
    /// the pairwise distances.
    Auto { count: usize },
    Explicit(Vec<T>),
}

impl<T> Default for EpsilonGrid<T> {
    fn default() -> Self {
        EpsilonGrid::Auto { count: 50 }
    }
}

/// Which grid points enter the slope fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitRange<T> {
    /// Scales whose correlation sum lies in `[lo, hi]`.
    Corr { lo: f64, hi: f64 },
    /// Scales in `[lo, hi]`.
    Scale { lo: T, hi: T },
}

impl<T> Default for FitRange<T> {
    fn default() -> Self {
        FitRange::Corr { lo: 0.005, hi: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationDimensionResult {
    pub epsilons: Vec<f64>,
    pub corr_sums: Vec<f64>,
    pub slope: f64,
    pub fit_range: (f64, f64),
    pub fit_points: usize,
    pub r_squared: f64,
}

/// Correlation sum over all pairs on a scale grid and the least-squares
/// slope of `log Corr` against `log ε` in the fit range.
pub fn correlation_dimension<T: Scalar>(
    e: &EmbeddingMatrix<T>,
    grid: &EpsilonGrid<T>,
    fit: FitRange<T>,
) -> Result<CorrelationDimensionResult> {
    let n = e.rows();
    if n < 20 {
        return Err(AnalysisError::TooFewPoints { needed: 20, got: n });
    }
    let mut d: Vec<T> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| ((i + 1)..n).map(move |j| dist(e.row(i), e.row(j))))
        .collect();
    d.par_sort_unstable_by(cmp_scalar);
    let max = d[d.len() - 1];
    if max == T::zero() {
        return Err(AnalysisError::DegenerateCloud);
    }
    let epsilons: Vec<T> = match grid {
        EpsilonGrid::Explicit(v) => v.clone(),
        EpsilonGrid::Auto { count } => {
            let mut lo = d[(d.len() - 1) / 100];
            if lo <= T::zero() {
                lo = d[d.partition_point(|&x| x <= T::zero())];
            }
            let count = (*count).max(2);
            let (a, b) = (lo.ln(), max.ln());
            (0..count)
                .map(|k| {
                    if k + 1 == count {
                        max
                    } else {
                        (a + (b - a) * T::of_usize(k) / T::of_usize(count - 1)).exp()
                    }
                })
                .collect()
        }
    };
    let total = T::of_usize(d.len());
    let corr: Vec<T> = epsilons
        .iter()
        .map(|&eps| T::of_usize(d.partition_point(|&x| x <= eps)) / total)
        .collect();

    let selected: Vec<usize> = (0..epsilons.len())
        .filter(|&k| {
            let (eps, c) = (epsilons[k], corr[k]);
            if eps <= T::zero() || c <= T::zero() {
                return false;
            }
            match fit {
                FitRange::Corr { lo, hi } => c >= T::of(lo) && c <= T::of(hi),
                FitRange::Scale { lo, hi } => eps >= lo && eps <= hi,
            }
        })
        .collect();
    if selected.len() < 5 {
        return Err(AnalysisError::InsufficientScaling { points: selected.len() });
    }
    let xs: Vec<f64> = selected.iter().map(|&k| epsilons[k].to_f64_lossy().ln()).collect();
    let ys: Vec<f64> = selected.iter().map(|&k| corr[k].to_f64_lossy().ln()).collect();
    let (slope, r_squared) = least_squares(&xs, &ys);
    Ok(CorrelationDimensionResult {
        epsilons: epsilons.iter().map(|x| x.to_f64_lossy()).collect(),
        corr_sums: corr.iter().map(|x| x.to_f64_lossy()).collect(),
        slope,
        fit_range: (
            epsilons[selected[0]].to_f64_lossy(),
            epsilons[*selected.last().unwrap()].to_f64_lossy(),
        ),
        fit_points: selected.len(),
        r_squared,
    })
}

/// Slope and coefficient of determination of an ordinary least-squares line.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Largest Euclidean distance between rows with the same index.
pub fn sup_row_distance<T: Scalar>(a: &EmbeddingMatrix<T>, b: &EmbeddingMatrix<T>) -> Result<T> {
    if a.rows() != b.rows() || a.dim() != b.dim() {
        return Err(AnalysisError::ShapeMismatch {
            left_rows: a.rows(),
            left_dim: a.dim(),
            right_rows: b.rows(),
            right_dim: b.dim(),
        });
    }
    Ok((0..a.rows())
        .map(|i| dist(a.row(i), b.row(i)))
        .fold(T::zero(), T::max))
}

/// Parameters for embedding a series that lives on integer ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SseOptions {
    pub r: i64,
    /// Minimum subsequence length; defaults to the shortest embeddable one.
    pub min_len: Option<usize>,
    pub m: usize,
    pub tau: usize,
}

impl SseOptions {
    pub fn new(m: usize, tau: usize) -> Self {
        Self {
            r: 1,
            min_len: None,
            m,
            tau,
        }
    }

    pub fn effective_min_len(&self) -> usize {
        (self.m + 1).max(self.m * self.tau) + 1
    }
}

#[derive(Debug, Clone)]
pub struct SseOutcome<T> {
    pub embedding: EmbeddingMatrix<T>,
    pub subsequences: SubsequenceSet,
    pub skipped: Vec<SkippedBlock>,
}

/// Subsequence extraction plus embedding for a series whose time stamps are
/// integer ticks (see [`crate::timeseries::rescale_to_grid`]).
pub fn sse_pipeline<T: Scalar>(ts: &TimeSeries<T>, opts: &SseOptions) -> Result<SseOutcome<T>> {
    let ticks = integer_ticks(ts)?;
    let min_len = opts.min_len.unwrap_or_else(|| opts.effective_min_len()).min(ticks.len());
    let set = extract_subsequences(&ticks, opts.r, min_len.max(1))?;
    let out = embedding::sse(ts, &set, opts.m, opts.tau)?;
    Ok(SseOutcome {
        embedding: out.embedding,
        subsequences: set,
        skipped: out.skipped,
    })
}

fn integer_ticks<T: Scalar>(ts: &TimeSeries<T>) -> Result<Vec<i64>> {
    ts.times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if t == t.round() {
                t.to_i64().ok_or(AnalysisError::NonIntegerTimes { index: i })
            } else {
                Err(AnalysisError::NonIntegerTimes { index: i })
            }
        })
        .collect()
}

/// Largest bottleneck distance over dimensions `0..=max_dim`.
pub fn max_bottleneck<T: Scalar>(a: &PersistenceDiagram<T>, b: &PersistenceDiagram<T>, max_dim: usize) -> Result<T> {
    let mut worst = T::zero();
    for k in 0..=max_dim {
        worst = worst.max(bottleneck(a, b, k)?);
    }
    Ok(worst)
}

/// Monte-Carlo comparison of SSE diagrams under missingness with the TDE
/// diagram of the complete series.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceProbe {
    /// Must produce a uniformly sampled series.
    pub generator: GeneratorSpec,
    pub missingness: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub m: usize,
    pub tau: usize,
    pub max_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub missingness: f64,
    pub mean_bottleneck: f64,
    pub stderr: f64,
    pub reps: usize,
}

/// One row per missingness level. Replication `i` uses the same uniform
/// draws at every level, so lower levels observe supersets of the points
/// seen at higher ones.
pub fn convergence_probe(probe: &ConvergenceProbe) -> Result<Vec<ConvergenceRow>> {
    if probe.reps == 0 {
        return Ok(Vec::new());
    }
    let series = probe.generator.generate()?;
    let series = TimeSeries::uniform(series.values().to_vec())?;
    let params = FiltrationParams::up_to(probe.max_dim);
    let reference = vr_persistence(&embedding::tde(series.values(), probe.m, probe.tau)?, &params)?;
    let opts = SseOptions::new(probe.m, probe.tau);

    probe
        .missingness
        .iter()
        .map(|&p| {
            let dists: Vec<f64> = (0..probe.reps)
                .into_par_iter()
                .map(|rep| -> Result<f64> {
                    let observed = apply_missingness(&series, p, derive_seed(probe.seed, &[rep as u64]))?;
                    let out = sse_pipeline(&observed, &opts)?;
                    let dgm = vr_persistence(&out.embedding, &params)?;
                    max_bottleneck(&reference, &dgm, probe.max_dim)
                })
                .collect::<Result<_>>()?;
            let (mean, stderr) = mean_stderr(&dists);
            Ok(ConvergenceRow {
                missingness: p,
                mean_bottleneck: mean,
                stderr,
                reps: probe.reps,
            })
        })
        .collect()
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::GeneratorKind;
    use rand::Rng;

    #[test]
    fn sine_scores_high_and_is_scale_invariant() {
        let v: Vec<f64> = (0..300).map(|t| (2.0 * std::f64::consts::PI * t as f64 / 20.3).sin()).collect();
        let e = embedding::tde(&v, 12, 1).unwrap();
        let s = periodicity_score(&e).unwrap();
        assert!(s.score >= 0.85, "{s:?}");
        let scaled: Vec<f64> = v.iter().map(|x| x * 37.5).collect();
        let s2 = periodicity_score(&embedding::tde(&scaled, 12, 1).unwrap()).unwrap();
        assert!((s.score - s2.score).abs() < 1e-12);
    }

    #[test]
    fn collinear_cloud_scores_zero() {
        let e = EmbeddingMatrix::from_points(&[vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 5.0]]);
        let s = periodicity_score(&e).unwrap();
        assert_eq!(s.score, 0.0);
        assert_eq!(s.best_feature, None);
        let flat = EmbeddingMatrix::from_points(&[vec![1.0, 1.0]]);
        assert!(matches!(periodicity_score(&flat), Err(AnalysisError::EmptyAfterNormalization)));
    }

    #[test]
    fn segment_and_square_dimensions() {
        let mut r = crate::simulate::rng(3);
        let seg: Vec<Vec<f64>> = (0..1000).map(|_| {
            let t: f64 = r.gen();
            vec![t, 0.5 * t]
        }).collect();
        let d1 = correlation_dimension(&EmbeddingMatrix::from_points(&seg), &EpsilonGrid::default(), FitRange::default()).unwrap();
        assert!((0.85..=1.15).contains(&d1.slope), "{}", d1.slope);
        let sq: Vec<Vec<f64>> = (0..1000).map(|_| vec![r.gen(), r.gen()]).collect();
        let d2 = correlation_dimension(&EmbeddingMatrix::from_points(&sq), &EpsilonGrid::default(), FitRange::default()).unwrap();
        assert!((1.8..=2.2).contains(&d2.slope), "{}", d2.slope);
        assert!(d2.corr_sums.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*d2.corr_sums.last().unwrap(), 1.0);
    }

    #[test]
    fn corrdim_errors() {
        let few = EmbeddingMatrix::from_points(&vec![vec![0.0, 1.0]; 10]);
        assert!(matches!(
            correlation_dimension(&few, &EpsilonGrid::default(), FitRange::default()),
            Err(AnalysisError::TooFewPoints { .. })
        ));
        let same = EmbeddingMatrix::from_points(&vec![vec![0.0, 1.0]; 30]);
        assert!(matches!(
            correlation_dimension(&same, &EpsilonGrid::default(), FitRange::default()),
            Err(AnalysisError::DegenerateCloud)
        ));
        let line: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        assert!(matches!(
            correlation_dimension(&EmbeddingMatrix::from_points(&line), &EpsilonGrid::Explicit(vec![1.0, 2.0]), FitRange::default()),
            Err(AnalysisError::InsufficientScaling { .. })
        ));
    }

    #[test]
    fn row_distance() {
        let a = EmbeddingMatrix::from_points(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let b = EmbeddingMatrix::from_points(&[vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(sup_row_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(sup_row_distance(&a, &b).unwrap(), 1.0);
        let c = EmbeddingMatrix::from_points(&[vec![0.0, 1.0]]);
        assert!(sup_row_distance(&a, &c).is_err());
    }

    #[test]
    fn probe_edges() {
        let probe = ConvergenceProbe {
            generator: GeneratorSpec::new(GeneratorKind::TwoLoop { period: 9.7, offset: 3.0 }, 120, 0),
            missingness: vec![0.0, 0.2],
            reps: 3,
            seed: 4,
            m: 3,
            tau: 1,
            max_dim: 1,
        };
        let rows = convergence_probe(&probe).unwrap();
        assert_eq!(rows[0].mean_bottleneck, 0.0);
        assert!(rows[1].mean_bottleneck > 0.0);
        let none = convergence_probe(&ConvergenceProbe { reps: 0, ..probe }).unwrap();
        assert!(none.is_empty());
    }
}
