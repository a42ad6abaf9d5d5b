use sse_tda::analysis::AnalysisError;
use sse_tda::denoise::DenoiseError;
use sse_tda::persistence::PersistenceError;

pub const INPUT: u8 = 3;
pub const NUMERICAL: u8 = 4;
pub const INVARIANT: u8 = 5;

pub const HELP: &str = "\
Exit codes:
  0  success
  2  invalid command line
  3  input error (missing or malformed file, invalid parameter, series too short)
  4  numerical failure (rank failure, degenerate cloud, no scaling region, complex too large)
  5  invariant violation (a check that must hold by construction failed)";

/// A result that contradicts a guarantee of the method.
#[derive(Debug, thiserror::Error)]
#[error("invariant violated: {0}")]
pub struct InvariantViolation(pub String);

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InvariantViolation>() {
            return INVARIANT;
        }
        let code = if let Some(e) = cause.downcast_ref::<sse_tda::Error>() {
            library(e)
        } else if let Some(e) = cause.downcast_ref::<AnalysisError>() {
            analysis(e)
        } else if let Some(e) = cause.downcast_ref::<DenoiseError>() {
            denoise(e)
        } else if let Some(e) = cause.downcast_ref::<PersistenceError>() {
            persistence(e)
        } else {
            None
        };
        if let Some(code) = code {
            return code;
        }
    }
    INPUT
}

fn library(e: &sse_tda::Error) -> Option<u8> {
    match e {
        sse_tda::Error::Analysis(e) => analysis(e),
        sse_tda::Error::Denoise(e) => denoise(e),
        sse_tda::Error::Persistence(e) => persistence(e),
        _ => None,
    }
}

// wrappers are transparent, so their inner errors never show up in `chain()`
fn analysis(e: &AnalysisError) -> Option<u8> {
    match e {
        AnalysisError::DegenerateCloud
        | AnalysisError::InsufficientScaling { .. }
        | AnalysisError::EmptyAfterNormalization => Some(NUMERICAL),
        AnalysisError::Persistence(p) => persistence(p),
        _ => None,
    }
}

fn denoise(e: &DenoiseError) -> Option<u8> {
    matches!(e, DenoiseError::NumericalRankFailure(_)).then_some(NUMERICAL)
}

fn persistence(e: &PersistenceError) -> Option<u8> {
    match e {
        PersistenceError::ComplexTooLarge { .. } => Some(NUMERICAL),
        PersistenceError::ConventionMismatch => Some(INVARIANT),
        _ => None,
    }
}
