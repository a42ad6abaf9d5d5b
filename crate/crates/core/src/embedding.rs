//! Delay embeddings (TDE and the stacked subsequence embedding), pointwise
//! normalization, and duplicate-point extensions.

use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::subsequence::{check_parent, SubsequenceError, SubsequenceSet};
use crate::timeseries::TimeSeries;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("series of length {n} too short for M={m}, tau={tau} (need n > max(M+1, M*tau))")]
    SeriesTooShort { n: usize, m: usize, tau: usize },
    #[error("M and tau must be positive")]
    InvalidParameters,
    #[error("no subsequence is long enough to embed")]
    NoUsableSubsequence,
    #[error("{expected} delays given for {got} subsequences")]
    TauCountMismatch { expected: usize, got: usize },
    #[error("point {index} has all coordinates equal")]
    ConstantWindow { index: usize },
    #[error("cannot extend an empty embedding")]
    EmptyBase,
    #[error("embeddings differ in shape ({left_rows}x{left_dim} vs {right_rows}x{right_dim})")]
    ShapeMismatch {
        left_rows: usize,
        left_dim: usize,
        right_rows: usize,
        right_dim: usize,
    },
    #[error("embedding csv row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error(transparent)]
    Subsequence(#[from] SubsequenceError),
}

pub type Result<T> = std::result::Result<T, EmbeddingError>;

/// Where a row of an embedding came from: block `p`, window start `i`
/// (index within the block's subsequence).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub block: usize,
    pub start: usize,
}

/// Point cloud of delay vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    data: Vec<T>,
    dim: usize,
    m: usize,
    tau_per_block: Vec<usize>,
    provenance: Vec<Provenance>,
}

/// Anything that can be viewed as a finite cloud of equal-length points.
pub trait PointCloud<T> {
    fn n_points(&self) -> usize;
    fn point(&self, i: usize) -> &[T];
}

impl<T> PointCloud<T> for EmbeddingMatrix<T> {
    fn n_points(&self) -> usize {
        self.provenance.len()
    }

    fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

impl<T> PointCloud<T> for [Vec<T>] {
    fn n_points(&self) -> usize {
        self.len()
    }

    fn point(&self, i: usize) -> &[T] {
        &self[i]
    }
}

impl<T> PointCloud<T> for Vec<Vec<T>> {
    fn n_points(&self) -> usize {
        self.len()
    }

    fn point(&self, i: usize) -> &[T] {
        &self[i]
    }
}

impl<T: Scalar> EmbeddingMatrix<T> {
    /// Wraps raw points as a single block (provenance `(0, i)`).
    pub fn from_points(points: &[Vec<T>]) -> Self {
        let dim = points.first().map_or(0, Vec::len);
        assert!(points.iter().all(|p| p.len() == dim), "ragged point cloud");
        Self {
            data: points.iter().flatten().copied().collect(),
            dim,
            m: dim.saturating_sub(1),
            tau_per_block: vec![1],
            provenance: (0..points.len()).map(|i| Provenance { block: 0, start: i }).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.provenance.len()
    }

    /// Embedding dimension `M + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delays(&self) -> usize {
        self.m
    }

    pub fn tau_per_block(&self) -> &[usize] {
        &self.tau_per_block
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim.max(1)).take(self.rows())
    }

    pub fn to_points(&self) -> Vec<Vec<T>> {
        self.iter_rows().map(<[T]>::to_vec).collect()
    }

    fn push_row(&mut self, row: &[T], prov: Provenance) {
        self.data.extend_from_slice(row);
        self.provenance.push(prov);
    }

    /// Keeps only the rows at `keep` (in that order).
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let mut out = Self {
            data: Vec::with_capacity(keep.len() * self.dim),
            dim: self.dim,
            m: self.m,
            tau_per_block: self.tau_per_block.clone(),
            provenance: Vec::with_capacity(keep.len()),
        };
        for &i in keep {
            out.push_row(self.row(i), self.provenance[i]);
        }
        out
    }

    /// One CSV row per point, `M+1` columns `x0..xM`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for row in self.iter_rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{:?}", x.to_f64_lossy())).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Reads the format written by [`Self::write_csv`]; every row becomes a
    /// point of block 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut points = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let bad = |message: String| EmbeddingError::Malformed { row: i + 1, message };
            let record = record.map_err(|e| bad(e.to_string()))?;
            let point = record
                .iter()
                .map(|c| match c.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(T::of(x)),
                    _ => Err(bad(format!("`{c}` is not a finite number"))),
                })
                .collect::<Result<Vec<T>>>()?;
            points.push(point);
        }
        if points.is_empty() {
            return Err(EmbeddingError::Malformed { row: 0, message: "no points".into() });
        }
        Ok(Self::from_points(&points))
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            m: usize,
            tau_per_block: &'a [usize],
            points: Vec<Vec<f64>>,
            provenance: &'a [Provenance],
        }
        serde_json::to_string(&Doc {
            m: self.m,
            tau_per_block: &self.tau_per_block,
            points: self
                .iter_rows()
                .map(|r| r.iter().map(|x| x.to_f64_lossy()).collect())
                .collect(),
            provenance: &self.provenance,
        })
        .expect("embedding serializes")
    }
}

fn check_len(n: usize, m: usize, tau: usize) -> Result<()> {
    if m == 0 || tau == 0 {
        return Err(EmbeddingError::InvalidParameters);
    }
    if n <= (m + 1).max(m * tau) {
        return Err(EmbeddingError::SeriesTooShort { n, m, tau });
    }
    Ok(())
}

/// Time-delay embedding of a uniformly sampled series: row `i` is
/// `(x[i], x[i+τ], …, x[i+Mτ])`.
pub fn tde<T: Scalar>(values: &[T], m: usize, tau: usize) -> Result<EmbeddingMatrix<T>> {
    check_len(values.len(), m, tau)?;
    let mut out = EmbeddingMatrix {
        data: Vec::new(),
        dim: m + 1,
        m,
        tau_per_block: vec![tau],
        provenance: Vec::new(),
    };
    append_block(&mut out, values, 0, tau);
    Ok(out)
}

fn append_block<T: Scalar>(out: &mut EmbeddingMatrix<T>, values: &[T], block: usize, tau: usize) {
    let rows = values.len() - out.m * tau;
    out.data.reserve(rows * out.dim);
    for i in 0..rows {
        for j in 0..=out.m {
            out.data.push(values[i + j * tau]);
        }
        out.provenance.push(Provenance { block, start: i });
    }
}

/// Delay step for each subsequence block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tau {
    Shared(usize),
    PerBlock(Vec<usize>),
}

impl From<usize> for Tau {
    fn from(t: usize) -> Self {
        Tau::Shared(t)
    }
}

/// A block left out of an SSE because it was too short.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkippedBlock {
    pub block: usize,
    pub len: usize,
}

/// Stacked subsequence embedding plus the blocks that were too short to use.
#[derive(Debug, Clone)]
pub struct SseResult<T> {
    pub embedding: EmbeddingMatrix<T>,
    pub skipped: Vec<SkippedBlock>,
}

/// Subsequence embedding: delay-embeds every subsequence (delays counted in
/// subsequence steps) and stacks the blocks in subsequence order.
pub fn sse<T: Scalar>(
    ts: &TimeSeries<T>,
    set: &SubsequenceSet,
    m: usize,
    tau: impl Into<Tau>,
) -> Result<SseResult<T>> {
    check_parent(ts, set)?;
    let tau = tau.into();
    let taus: Vec<usize> = match tau {
        Tau::Shared(t) => vec![t; set.len()],
        Tau::PerBlock(v) => {
            if v.len() != set.len() {
                return Err(EmbeddingError::TauCountMismatch {
                    expected: v.len(),
                    got: set.len(),
                });
            }
            v
        }
    };
    if m == 0 || taus.contains(&0) {
        return Err(EmbeddingError::InvalidParameters);
    }
    let mut out = EmbeddingMatrix {
        data: Vec::new(),
        dim: m + 1,
        m,
        tau_per_block: Vec::new(),
        provenance: Vec::new(),
    };
    let mut skipped = Vec::new();
    for (p, (sub, &t)) in set.subsequences.iter().zip(&taus).enumerate() {
        if check_len(sub.len(), m, t).is_err() {
            skipped.push(SkippedBlock { block: p, len: sub.len() });
            continue;
        }
        let values: Vec<T> = sub.indices.iter().map(|&i| ts.values()[i]).collect();
        append_block(&mut out, &values, p, t);
        out.tau_per_block.push(t);
    }
    if out.rows() == 0 {
        return Err(EmbeddingError::NoUsableSubsequence);
    }
    Ok(SseResult { embedding: out, skipped })
}

/// Centers each point on the mean of its own coordinates and scales it to
/// unit Euclidean norm.
pub fn pointwise_center_scale<T: Scalar>(e: &EmbeddingMatrix<T>) -> Result<EmbeddingMatrix<T>> {
    let mut out = e.clone();
    for (i, row) in out.data.chunks_exact_mut(e.dim.max(1)).enumerate() {
        if !normalize_row(row) {
            return Err(EmbeddingError::ConstantWindow { index: i });
        }
    }
    Ok(out)
}

/// As [`pointwise_center_scale`], dropping flat windows instead of failing.
/// Returns the normalized cloud and the indices of the rows that were kept.
pub fn pointwise_center_scale_lossy<T: Scalar>(e: &EmbeddingMatrix<T>) -> (EmbeddingMatrix<T>, Vec<usize>) {
    let mut out = e.clone();
    let mut keep = Vec::with_capacity(e.rows());
    for (i, row) in out.data.chunks_exact_mut(e.dim.max(1)).enumerate() {
        if normalize_row(row) {
            keep.push(i);
        }
    }
    let kept = out.select_rows(&keep);
    (kept, keep)
}

fn normalize_row<T: Scalar>(row: &mut [T]) -> bool {
    let n = T::of_usize(row.len());
    let mean = row.iter().fold(T::zero(), |a, &x| a + x) / n;
    // flat relative to the window's magnitude
    let scale = row.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    let spread = row.iter().fold(T::zero(), |a, &x| a.max((x - mean).abs()));
    if spread <= scale * T::unit_roundoff() * T::of(16.0) || spread == T::zero() {
        return false;
    }
    for x in row.iter_mut() {
        *x -= mean;
    }
    let norm = row.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    for x in row.iter_mut() {
        *x /= norm;
    }
    true
}

/// Base embedding plus `k` duplicated rows.
#[derive(Debug, Clone)]
pub struct ExtendedEmbedding<T> {
    pub base: EmbeddingMatrix<T>,
    /// Row indices into `base` that were duplicated, in append order.
    pub extra_rows: Vec<usize>,
}

impl<T: Scalar> ExtendedEmbedding<T> {
    pub fn k(&self) -> usize {
        self.extra_rows.len()
    }

    /// Base rows followed by the duplicated rows.
    pub fn to_matrix(&self) -> EmbeddingMatrix<T> {
        let mut idx: Vec<usize> = (0..self.base.rows()).collect();
        idx.extend_from_slice(&self.extra_rows);
        self.base.select_rows(&idx)
    }
}

/// Appends `k` copies of existing rows.
///
/// Without a reference the copies are the first `k` base rows, cycling. With
/// a reference, row `base.rows() + j` of the result is the base row closest
/// (Euclidean) to reference row `base.rows() + j`, for every reference row
/// past the end of the base; `k` is then implied by the reference length.
pub fn extend<T: Scalar>(
    base: &EmbeddingMatrix<T>,
    k: usize,
    reference: Option<&EmbeddingMatrix<T>>,
) -> Result<ExtendedEmbedding<T>> {
    if base.rows() == 0 {
        return Err(EmbeddingError::EmptyBase);
    }
    let extra_rows = match reference {
        None => (0..k).map(|j| j % base.rows()).collect(),
        Some(r) => {
            if r.dim() != base.dim() || r.rows() < base.rows() {
                return Err(EmbeddingError::ShapeMismatch {
                    left_rows: base.rows(),
                    left_dim: base.dim(),
                    right_rows: r.rows(),
                    right_dim: r.dim(),
                });
            }
            (base.rows()..r.rows())
                .map(|l| nearest_row(base, r.row(l)))
                .collect()
        }
    };
    Ok(ExtendedEmbedding {
        base: base.clone(),
        extra_rows,
    })
}

fn nearest_row<T: Scalar>(cloud: &EmbeddingMatrix<T>, target: &[T]) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, row) in cloud.iter_rows().enumerate() {
        let d = sq_dist(row, target);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[inline]
pub(crate) fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

#[inline]
pub(crate) fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    sq_dist(a, b).sqrt()
}
