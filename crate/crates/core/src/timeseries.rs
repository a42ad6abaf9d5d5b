//! Scalar time series: validation, integer-grid rescaling and file I/O.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TimeSeriesError {
    #[error("time series must contain at least one observation")]
    Empty,
    #[error("times and values differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("times are not strictly increasing at position {index}")]
    NotIncreasing { index: usize },
    #[error("non-finite entry at position {index}")]
    NonFinite { index: usize },
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{cell}` in column `{column}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("row {row}: non-finite value in column `{column}`")]
    NonFiniteCell { row: usize, column: String },
    #[error("row {row}: duplicate time stamp {time}")]
    DuplicateTime { row: usize, time: f64 },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("at least {needed} observations required, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("no common step explains all gaps within tolerance {tolerance}")]
    NoCommonStep { tolerance: f64 },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TimeSeriesError>;

/// Ordered `(time, value)` observations with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(TimeSeriesError::LengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        if times.is_empty() {
            return Err(TimeSeriesError::Empty);
        }
        for (i, (t, v)) in times.iter().zip(&values).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(TimeSeriesError::NonFinite { index: i });
            }
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(TimeSeriesError::NotIncreasing { index: i + 1 });
        }
        Ok(Self { times, values })
    }

    /// Series sampled at `0, 1, …, n-1`.
    pub fn uniform(values: Vec<T>) -> Result<Self> {
        let times = (0..values.len()).map(T::of_usize).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Same time stamps, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.times.clone(), values)
    }

    /// Keep the observations whose position satisfies `keep`.
    pub fn select(&self, mut keep: impl FnMut(usize) -> bool) -> Result<Self> {
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, (t, v))| (*t, *v))
            .unzip();
        Self::new(times, values)
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Result<Self> {
        self.with_values(self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn cast<U: Scalar>(&self) -> TimeSeries<U> {
        TimeSeries {
            times: self.times.iter().map(|t| U::of(t.to_f64_lossy())).collect(),
            values: self.values.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = SeriesDoc {
            times: self.times.iter().map(|t| t.to_f64_lossy()).collect(),
            values: self.values.iter().map(|v| v.to_f64_lossy()).collect(),
        };
        serde_json::to_string(&doc).expect("plain float vectors serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SeriesDoc = serde_json::from_str(text)?;
        Self::new(
            doc.times.into_iter().map(T::of).collect(),
            doc.values.into_iter().map(T::of).collect(),
        )
    }

    /// Writes `time_column,value_column` CSV with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W, time_column: &str, value_column: &str) -> std::io::Result<()> {
        writeln!(out, "{time_column},{value_column}")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            // `{:?}` on f64 is the shortest representation that parses back exactly
            writeln!(out, "{:?},{:?}", t.to_f64_lossy(), v.to_f64_lossy())?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| TimeSeriesError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file), "time", "value")
            .map_err(|source| TimeSeriesError::Io {
                path: path.display().to_string(),
                source,
            })
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesDoc {
    times: Vec<f64>,
    values: Vec<f64>,
}

/// Reads a CSV file with a header row, taking the named time and value columns.
///
/// Rows are sorted by time on return. A repeated time stamp is an error
/// reported against the data row (1-based, header excluded) where it occurs.
pub fn load_csv<T: Scalar>(
    path: impl AsRef<Path>,
    time_column: &str,
    value_column: &str,
) -> Result<TimeSeries<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TimeSeriesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(BufReader::new(file), time_column, value_column)
}

pub fn read_csv<T: Scalar, R: Read>(reader: R, time_column: &str, value_column: &str) -> Result<TimeSeries<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| TimeSeriesError::Malformed { row: 0, message: e.to_string() })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TimeSeriesError::MissingColumn(name.to_string()))
    };
    let tcol = find(time_column)?;
    let vcol = find(value_column)?;

    let mut rows: Vec<(f64, f64, usize)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| TimeSeriesError::Malformed { row, message: e.to_string() })?;
        let parse = |col: usize, name: &str| -> Result<f64> {
            let cell = record.get(col).unwrap_or("");
            let x: f64 = cell.parse().map_err(|_| TimeSeriesError::NonNumeric {
                row,
                column: name.to_string(),
                cell: cell.to_string(),
            })?;
            if !x.is_finite() {
                return Err(TimeSeriesError::NonFiniteCell { row, column: name.to_string() });
            }
            Ok(x)
        };
        let t = parse(tcol, time_column)?;
        let v = parse(vcol, value_column)?;
        rows.push((t, v, row));
    }
    if rows.is_empty() {
        return Err(TimeSeriesError::Empty);
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(TimeSeriesError::DuplicateTime {
            row: w[0].2.max(w[1].2),
            time: w[1].0,
        });
    }
    TimeSeries::new(
        rows.iter().map(|r| T::of(r.0)).collect(),
        rows.iter().map(|r| T::of(r.1)).collect(),
    )
}

/// Affine map between integer ticks and original time stamps:
/// `time ≈ base + tick * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerGrid<T> {
    pub ticks: Vec<i64>,
    pub base: T,
    pub step: T,
}

impl<T: Scalar> IntegerGrid<T> {
    pub fn time_of(&self, tick: i64) -> T {
        self.base + T::of(tick as f64) * self.step
    }

    /// Number of grid slots spanned, endpoints included.
    pub fn span_slots(&self) -> i64 {
        match (self.ticks.first(), self.ticks.last()) {
            (Some(a), Some(b)) => b - a + 1,
            _ => 0,
        }
    }
}

/// A grid may be at most this many times finer than the closest pair of
/// observations before it is rejected as spurious.
pub const DEFAULT_MAX_REFINEMENT: u32 = 2;

/// Maps irregular times onto integer ticks of the coarsest common step.
///
/// See [`rescale_to_grid_with`]; this uses [`DEFAULT_MAX_REFINEMENT`].
pub fn rescale_to_grid<T: Scalar>(ts: &TimeSeries<T>, tolerance: T) -> Result<(TimeSeries<T>, IntegerGrid<T>)> {
    rescale_to_grid_with(ts, tolerance, DEFAULT_MAX_REFINEMENT)
}

/// Maps irregular times onto integer ticks.
///
/// The step is the tolerance-Euclid GCD of the successive gaps; every gap
/// must then be an integer multiple of it within `tolerance`, and the step
/// may not be finer than `min_gap / max_refinement`. The first observation
/// becomes tick 0.
pub fn rescale_to_grid_with<T: Scalar>(
    ts: &TimeSeries<T>,
    tolerance: T,
    max_refinement: u32,
) -> Result<(TimeSeries<T>, IntegerGrid<T>)> {
    let n = ts.len();
    if n < 2 {
        return Err(TimeSeriesError::TooShort { needed: 2, got: n });
    }
    let no_step = || TimeSeriesError::NoCommonStep { tolerance: tolerance.to_f64_lossy() };
    let times = ts.times();
    let gaps: Vec<T> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let min_gap = gaps.iter().copied().fold(T::infinity(), T::min);

    let mut step = gaps[0];
    for &g in &gaps[1..] {
        step = float_gcd(step, g, tolerance);
    }
    if step <= tolerance || step < min_gap / T::of(max_refinement.max(1) as f64) - tolerance {
        return Err(no_step());
    }
    // refine the step from the end-to-end span
    let base = times[0];
    let mut ticks = Vec::with_capacity(n);
    for &t in times {
        let k = ((t - base) / step).round();
        ticks.push(k.to_i64().ok_or_else(no_step)?);
    }
    let span_ticks = T::of(*ticks.last().unwrap() as f64);
    let refined = (times[n - 1] - base) / span_ticks;
    for (&t, &k) in times.iter().zip(&ticks) {
        let back = base + T::of(k as f64) * refined;
        if (back - t).abs() > tolerance {
            return Err(no_step());
        }
    }
    let rescaled = TimeSeries::new(ticks.iter().map(|&k| T::of(k as f64)).collect(), ts.values().to_vec())?;
    Ok((
        rescaled,
        IntegerGrid {
            ticks,
            base,
            step: refined,
        },
    ))
}

fn float_gcd<T: Scalar>(a: T, b: T, tol: T) -> T {
    let (mut a, mut b) = if a >= b { (a, b) } else { (b, a) };
    while b > tol {
        let r = a - (a / b).floor() * b;
        // a remainder within tol of b means a was a multiple of b
        let r = if (b - r) <= tol { T::zero() } else { r };
        a = b;
        b = r;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(times: &[f64], values: &[f64]) -> TimeSeries<f64> {
        TimeSeries::new(times.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn parses_simple_csv() {
        let s: TimeSeries<f64> = read_csv("t,v\n1,0.5\n2,0.7".as_bytes(), "t", "v").unwrap();
        assert_eq!(s.times(), &[1.0, 2.0]);
        assert_eq!(s.values(), &[0.5, 0.7]);
    }

    #[test]
    fn sorts_unsorted_rows_and_accepts_crlf() {
        let s: TimeSeries<f64> = read_csv("time,value\r\n2,1e-1\r\n1,3.5E2\r\n".as_bytes(), "time", "value").unwrap();
        assert_eq!(s.times(), &[1.0, 2.0]);
        assert_eq!(s.values(), &[350.0, 0.1]);
    }

    #[test]
    fn duplicate_time_reports_row() {
        let err = read_csv::<f64, _>("t,v\n1,0\n3,1\n3,2\n".as_bytes(), "t", "v").unwrap_err();
        assert!(matches!(err, TimeSeriesError::DuplicateTime { row: 3, .. }), "{err:?}");
    }

    #[test]
    fn distinct_errors_for_bad_input() {
        let e = read_csv::<f64, _>("t,v\n1,x\n".as_bytes(), "t", "v").unwrap_err();
        assert!(matches!(e, TimeSeriesError::NonNumeric { row: 1, .. }));
        let e = read_csv::<f64, _>("t,v\n1,2\n".as_bytes(), "t", "w").unwrap_err();
        assert!(matches!(e, TimeSeriesError::MissingColumn(_)));
        let e = read_csv::<f64, _>("t,v\n1,NaN\n".as_bytes(), "t", "v").unwrap_err();
        assert!(matches!(e, TimeSeriesError::NonFiniteCell { row: 1, .. }));
        let e = load_csv::<f64>("/definitely/not/here.csv", "t", "v").unwrap_err();
        assert!(matches!(e, TimeSeriesError::Io { .. }));
    }

    #[test]
    fn constructor_invariants() {
        assert!(matches!(TimeSeries::<f64>::new(vec![], vec![]), Err(TimeSeriesError::Empty)));
        assert!(matches!(
            TimeSeries::new(vec![1.0, 1.0], vec![0.0, 0.0]),
            Err(TimeSeriesError::NotIncreasing { index: 1 })
        ));
        assert!(TimeSeries::new(vec![1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn rescales_half_step_grid() {
        let (r, g) = rescale_to_grid(&ts(&[0.0, 0.5, 1.5, 2.0], &[1.0; 4]), 1e-9).unwrap();
        assert_eq!(g.ticks, vec![0, 1, 3, 4]);
        assert_eq!(g.step, 0.5);
        assert_eq!(r.times(), &[0.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn rescales_integer_times_from_offset() {
        let (_, g) = rescale_to_grid(&ts(&[1.0, 2.0, 5.0], &[0.0; 3]), 1e-9).unwrap();
        assert_eq!(g.ticks, vec![0, 1, 4]);
        assert_eq!(g.step, 1.0);
        assert_eq!(g.base, 1.0);
    }

    #[test]
    fn incommensurate_gaps_have_no_step() {
        let err = rescale_to_grid(&ts(&[0.0, 0.3, 1.0], &[0.0; 3]), 1e-9).unwrap_err();
        assert!(matches!(err, TimeSeriesError::NoCommonStep { .. }));
        let err = rescale_to_grid(&ts(&[0.0, 1.0, 1.0 + std::f64::consts::SQRT_2], &[0.0; 3]), 1e-9).unwrap_err();
        assert!(matches!(err, TimeSeriesError::NoCommonStep { .. }));
    }

    #[test]
    fn json_round_trip() {
        let s = ts(&[0.0, 1.5], &[2.0, -1.0]);
        let text = s.to_json();
        assert_eq!(text, r#"{"times":[0.0,1.5],"values":[2.0,-1.0]}"#);
        assert_eq!(TimeSeries::<f64>::from_json(&text).unwrap(), s);
    }
}
