//! Seeded generators for synthetic series, plus missingness and noise
//! injection. All randomness comes from ChaCha8 streams seeded with a `u64`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::{TimeSeries, TimeSeriesError};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("length must be at least {min} (got {got})")]
    InvalidLength { min: usize, got: usize },
    #[error("lambda must lie strictly between 0 and 1 (got {0})")]
    InvalidLambda(f64),
    #[error("missingness probability must lie in [0, 1) (got {0})")]
    InvalidProbability(f64),
    #[error("noise standard deviation must be nonnegative and finite (got {0})")]
    InvalidSigma(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
}

pub type Result<T> = std::result::Result<T, SimulateError>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with grid coordinates into an independent stream seed
/// (SplitMix64 finalizer over each word).
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    coords.iter().fold(mix(base.wrapping_add(0x9e37_79b9_7f4a_7c15)), |acc, &c| {
        mix(acc ^ mix(c.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveShape {
    Sine,
    Square,
    Sawtooth,
    Triangle,
}

/// One sinusoid `amplitude · sin(2πt/period + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub period: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// The `h` coordinate of the Hénon map started at the origin.
    Henon {
        #[serde(default = "default_a")]
        a: f64,
        #[serde(default = "default_b")]
        b: f64,
    },
    /// `50 cos(πt/4 − λπ) sin(πt/2) + 50` on `[0, 12π]`; `λ` is drawn from
    /// U(0.05, 0.95) when absent.
    Periodic {
        #[serde(default)]
        lambda: Option<f64>,
    },
    /// i.i.d. normal values at integer times.
    Gaussian {
        #[serde(default = "default_mean")]
        mean: f64,
        #[serde(default = "default_sd")]
        sd: f64,
    },
    Wave {
        shape: WaveShape,
        period: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    SumOfSinusoids {
        dt: f64,
        components: Vec<Component>,
    },
    /// A sine whose level jumps by `2·offset` halfway through, tracing two
    /// separate loops in delay coordinates.
    TwoLoop {
        #[serde(default = "default_two_loop_period")]
        period: f64,
        #[serde(default = "default_two_loop_offset")]
        offset: f64,
    },
}

fn default_a() -> f64 {
    1.4
}
fn default_b() -> f64 {
    0.3
}
fn default_mean() -> f64 {
    10.0
}
fn default_sd() -> f64 {
    2.0
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_two_loop_period() -> f64 {
    9.7
}
fn default_two_loop_offset() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        Self { kind, n, seed }
    }

    pub fn generate(&self) -> Result<TimeSeries<f64>> {
        let n = self.n;
        match &self.kind {
            GeneratorKind::Henon { a, b } => {
                let (h, _) = henon(n, *a, *b)?;
                Ok(TimeSeries::uniform(h)?)
            }
            GeneratorKind::Periodic { lambda } => {
                let lambda = match lambda {
                    Some(l) => *l,
                    None => rng(self.seed).gen_range(0.05..0.95),
                };
                periodic_signal(n, lambda)
            }
            GeneratorKind::Gaussian { mean, sd } => gaussian(n, *mean, *sd, self.seed),
            GeneratorKind::Wave {
                shape,
                period,
                amplitude,
                phase,
            } => wave(*shape, n, *period, *amplitude, *phase),
            GeneratorKind::SumOfSinusoids { dt, components } => sum_of_sinusoids(n, *dt, components),
            GeneratorKind::TwoLoop { period, offset } => two_loop(n, *period, *offset),
        }
    }
}

/// Hénon orbit from `(0, 0)`: `h' = 1 − a h² + g`, `g' = b h`.
pub fn henon(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(SimulateError::InvalidLength { min: 1, got: 0 });
    }
    let mut h = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for _ in 0..n {
        h.push(x);
        g.push(y);
        let nx = 1.0 - a * x * x + y;
        let ny = b * x;
        x = nx;
        y = ny;
    }
    Ok((h, g))
}

/// `n` evenly spaced points in `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

pub fn periodic_signal(n: usize, lambda: f64) -> Result<TimeSeries<f64>> {
    if n < 2 {
        return Err(SimulateError::InvalidLength { min: 2, got: n });
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(SimulateError::InvalidLambda(lambda));
    }
    let times = linspace(0.0, 12.0 * PI, n);
    let values = times
        .iter()
        .map(|&t| 50.0 * (PI * t / 4.0 - lambda * PI).cos() * (PI * t / 2.0).sin() + 50.0)
        .collect();
    Ok(TimeSeries::new(times, values)?)
}

pub fn gaussian(n: usize, mean: f64, sd: f64, seed: u64) -> Result<TimeSeries<f64>> {
    if n == 0 {
        return Err(SimulateError::InvalidLength { min: 1, got: 0 });
    }
    let normal = Normal::new(mean, sd).map_err(|e| SimulateError::InvalidParameter(e.to_string()))?;
    let mut r = rng(seed);
    Ok(TimeSeries::uniform((0..n).map(|_| normal.sample(&mut r)).collect())?)
}

/// Closed-form waveform at integer times `0..n`. Discontinuities take the
/// midpoint value.
pub fn wave(shape: WaveShape, n: usize, period: f64, amplitude: f64, phase: f64) -> Result<TimeSeries<f64>> {
    if n == 0 {
        return Err(SimulateError::InvalidLength { min: 1, got: 0 });
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(SimulateError::InvalidParameter(format!("period must be positive (got {period})")));
    }
    let frac = |x: f64| x - x.floor();
    let values = (0..n)
        .map(|i| {
            let u = i as f64 / period + phase / (2.0 * PI);
            let v = match shape {
                WaveShape::Sine => (2.0 * PI * u).sin(),
                WaveShape::Square => {
                    let f = frac(u);
                    if f == 0.0 || f == 0.5 {
                        0.0
                    } else if f < 0.5 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                WaveShape::Sawtooth => {
                    let f = frac(u + 0.5);
                    if f == 0.0 {
                        0.0
                    } else {
                        2.0 * f - 1.0
                    }
                }
                WaveShape::Triangle => 1.0 - 2.0 * (2.0 * frac(u + 0.25) - 1.0).abs(),
            };
            amplitude * v
        })
        .collect();
    Ok(TimeSeries::uniform(values)?)
}

/// Sum of sinusoids sampled at `k · dt`.
pub fn sum_of_sinusoids(n: usize, dt: f64, components: &[Component]) -> Result<TimeSeries<f64>> {
    if n == 0 {
        return Err(SimulateError::InvalidLength { min: 1, got: 0 });
    }
    if !(dt > 0.0) || components.iter().any(|c| !(c.period > 0.0)) {
        return Err(SimulateError::InvalidParameter("dt and periods must be positive".into()));
    }
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let values = times
        .iter()
        .map(|&t| {
            components
                .iter()
                .map(|c| c.amplitude * (2.0 * PI * t / c.period + c.phase).sin())
                .sum()
        })
        .collect();
    Ok(TimeSeries::new(times, values)?)
}

/// Toy radial-velocity shapes: a planet-like sinusoid, optionally with a
/// slower spot-modulation term.
pub fn rv_toy(n: usize, with_spot: bool) -> Result<TimeSeries<f64>> {
    let mut components = vec![Component {
        period: 4.0,
        amplitude: 0.87,
        phase: 0.0,
    }];
    if with_spot {
        components.push(Component {
            period: 12.75,
            amplitude: 0.58,
            phase: 0.0,
        });
    }
    sum_of_sinusoids(n, 0.2505, &components)
}

pub fn two_loop(n: usize, period: f64, offset: f64) -> Result<TimeSeries<f64>> {
    if n < 2 {
        return Err(SimulateError::InvalidLength { min: 2, got: n });
    }
    if !(period > 0.0) {
        return Err(SimulateError::InvalidParameter(format!("period must be positive (got {period})")));
    }
    let values = (0..n)
        .map(|i| {
            let level = if i < n / 2 { offset } else { -offset };
            (2.0 * PI * i as f64 / period).sin() + level
        })
        .collect();
    Ok(TimeSeries::uniform(values)?)
}

/// Drops each observation independently with probability `p`. If every
/// point would be dropped the draw is repeated.
pub fn apply_missingness(ts: &TimeSeries<f64>, p: f64, seed: u64) -> Result<TimeSeries<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(SimulateError::InvalidProbability(p));
    }
    if p == 0.0 {
        return Ok(ts.clone());
    }
    let mut r = rng(seed);
    loop {
        let keep: Vec<bool> = (0..ts.len()).map(|_| r.gen::<f64>() >= p).collect();
        if keep.iter().any(|&k| k) {
            return Ok(ts.select(|i| keep[i])?);
        }
    }
}

/// Adds i.i.d. `N(0, sigma²)` noise.
pub fn add_noise(ts: &TimeSeries<f64>, sigma: f64, seed: u64) -> Result<TimeSeries<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(SimulateError::InvalidSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(ts.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| SimulateError::InvalidParameter(e.to_string()))?;
    let mut r = rng(seed);
    let values = ts.values().iter().map(|&v| v + normal.sample(&mut r)).collect();
    Ok(ts.with_values(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn henon_first_steps() {
        assert_eq!(henon(1, 1.4, 0.3).unwrap(), (vec![0.0], vec![0.0]));
        let (h, g) = henon(3, 1.4, 0.3).unwrap();
        assert_eq!(h, vec![0.0, 1.0, 1.0 - 1.4]);
        assert_eq!(g, vec![0.0, 0.0, 0.3]);
        let (h, _) = henon(500, 1.4, 0.3).unwrap();
        assert!(h.iter().all(|x| x.abs() < 1.5));
    }

    #[test]
    fn periodic_values() {
        let ts = periodic_signal(2001, 0.5).unwrap();
        assert!((ts.values()[0] - 50.0).abs() < 1e-12);
        assert!(ts.values().iter().all(|&v| (0.0..=100.0).contains(&v)));
        assert!(matches!(periodic_signal(10, 0.0), Err(SimulateError::InvalidLambda(_))));
        assert!(matches!(periodic_signal(10, 1.0), Err(SimulateError::InvalidLambda(_))));
    }

    #[test]
    fn waves() {
        let sq = wave(WaveShape::Square, 16, 8.0, 2.0, 0.0).unwrap();
        assert_eq!(sq.values()[2], 2.0);
        assert_eq!(sq.values()[0], 0.0);
        let saw = wave(WaveShape::Sawtooth, 80, 8.0, 1.5, 0.0).unwrap();
        let mean: f64 = saw.values().iter().sum::<f64>() / 80.0;
        assert!(mean.abs() < 1e-9);
        let tri = wave(WaveShape::Triangle, 16, 8.0, 3.0, 0.0).unwrap();
        let max = tri.values().iter().cloned().fold(f64::MIN, f64::max);
        let min = tri.values().iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!((max, min), (3.0, -3.0));
        assert!(wave(WaveShape::Sine, 4, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn missingness() {
        let ts = TimeSeries::uniform(vec![1.0; 1000]).unwrap();
        assert_eq!(apply_missingness(&ts, 0.0, 1).unwrap(), ts);
        let kept = apply_missingness(&ts, 0.25, 7).unwrap().len() as f64;
        assert!((kept - 750.0).abs() < 4.0 * 13.7);
        assert_eq!(apply_missingness(&ts, 0.25, 7).unwrap(), apply_missingness(&ts, 0.25, 7).unwrap());
        assert!(apply_missingness(&ts, 1.0, 7).is_err());
        let one = TimeSeries::uniform(vec![1.0]).unwrap();
        assert_eq!(apply_missingness(&one, 0.99, 3).unwrap().len(), 1);
    }

    #[test]
    fn noise() {
        let ts = TimeSeries::uniform(vec![0.0; 5000]).unwrap();
        assert_eq!(add_noise(&ts, 0.0, 1).unwrap(), ts);
        let noisy = add_noise(&ts, 2.0, 11).unwrap();
        let mean: f64 = noisy.values().iter().sum::<f64>() / 5000.0;
        assert!(mean.abs() < 4.0 * 2.0 / 5000f64.sqrt());
        assert_eq!(noisy, add_noise(&ts, 2.0, 11).unwrap());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = GeneratorSpec::new(
            GeneratorKind::Wave {
                shape: WaveShape::Square,
                period: 8.0,
                amplitude: 1.0,
                phase: 0.0,
            },
            40,
            5,
        );
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""kind":"wave""#));
        assert_eq!(serde_json::from_str::<GeneratorSpec>(&text).unwrap(), spec);
        let henon: GeneratorSpec = serde_json::from_str(r#"{"kind":"henon","n":5}"#).unwrap();
        assert_eq!(henon.generate().unwrap().values()[1], 1.0);
    }

    #[test]
    fn seeds_differ_by_coordinate() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(9, &[3]), derive_seed(9, &[3]));
        let a = GeneratorSpec::new(GeneratorKind::Periodic { lambda: None }, 50, 1).generate().unwrap();
        let b = GeneratorSpec::new(GeneratorKind::Periodic { lambda: None }, 50, 2).generate().unwrap();
        assert_ne!(a, b);
    }
}
