//! Subsequence embeddings of irregularly sampled time series and the
//! Vietoris–Rips persistent homology of the resulting point clouds.
//!
//! The numeric code is generic over [`Scalar`]; the `*F64` aliases below are
//! the everyday instantiations.

pub mod analysis;
pub mod denoise;
pub mod embedding;
pub mod experiment;
pub mod persistence;
pub mod scalar;
pub mod simulate;
pub mod subsequence;
pub mod timeseries;

use thiserror::Error;

pub use analysis::{
    convergence_probe, correlation_dimension, periodicity_score, sup_row_distance, AnalysisError,
    CorrelationDimensionResult, PeriodicityResult,
};
pub use denoise::{backward_pinv, denoise, denoising_bound, forward_nudft, threshold_psd, DenoiseError, SpectralVector};
pub use embedding::{extend, pointwise_center_scale, sse, tde, EmbeddingError, EmbeddingMatrix, ExtendedEmbedding};
pub use persistence::{
    bottleneck, hausdorff, vr_persistence, FiltrationParams, PersistenceDiagram, PersistenceError, Threshold,
};
pub use scalar::Scalar;
pub use simulate::{GeneratorSpec, SimulateError};
pub use subsequence::{extract_subsequences, materialize, Subsequence, SubsequenceError, SubsequenceSet};
pub use timeseries::{load_csv, rescale_to_grid, IntegerGrid, TimeSeries, TimeSeriesError};

/// Double-double precision scalar.
pub type DoubleDouble = twofloat::TwoFloat;

pub type TimeSeriesF64 = TimeSeries<f64>;
pub type EmbeddingF64 = EmbeddingMatrix<f64>;
pub type DiagramF64 = PersistenceDiagram<f64>;
pub type SpectrumF64 = SpectralVector<f64>;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
    #[error(transparent)]
    Subsequence(#[from] SubsequenceError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Experiment(#[from] experiment::ExperimentError),
}

pub type Result<T> = std::result::Result<T, Error>;
