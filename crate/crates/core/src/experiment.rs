//! Replicated simulation studies over parameter grids.
//!
//! Each grid cell gets its own seed stream derived from the base seed, the
//! experiment, the cell's grid coordinates and the replication index, so
//! any cell can be recomputed on its own. Replications run in parallel;
//! results are collected in grid order so outputs are byte-identical across
//! runs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    self, convergence_probe, correlation_dimension, max_bottleneck, mean_stderr, periodicity_score, sse_pipeline,
    ConvergenceProbe, EpsilonGrid, FitRange, SseOptions,
};
use crate::denoise::{denoise, denoising_bound};
use crate::persistence::{vr_persistence, FiltrationParams};
use crate::simulate::{add_noise, apply_missingness, derive_seed, GeneratorKind, GeneratorSpec};
use crate::timeseries::TimeSeries;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ReconstructionAccuracy,
    PeriodicityTable,
    DenoisingStability,
    Convergence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ReconstructionAccuracy => "reconstruction-accuracy",
            ExperimentKind::PeriodicityTable => "periodicity-table",
            ExperimentKind::DenoisingStability => "denoising-stability",
            ExperimentKind::Convergence => "convergence",
        }
    }

    fn id(self) -> u64 {
        self as u64
    }
}

/// Parameter axes; empty axes take per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParameterGrid {
    pub n: Vec<usize>,
    pub missingness: Vec<f64>,
    pub noise_sigma: Vec<f64>,
    pub m: Vec<usize>,
    pub tau: Vec<usize>,
    /// Absolute PSD threshold for denoising; `9σ²` when absent.
    pub threshold: Option<f64>,
    /// Series generator; `n` and the seed are supplied per cell.
    pub generator: Option<GeneratorKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: ParameterGrid,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, replications: usize, seed: u64) -> Self {
        Self {
            experiment,
            replications,
            seed,
            grid: ParameterGrid::default(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The grid with every empty axis replaced by its default.
    pub fn resolved_grid(&self) -> ParameterGrid {
        let g = &self.grid;
        let or = |v: &Vec<usize>, d: &[usize]| if v.is_empty() { d.to_vec() } else { v.clone() };
        let orf = |v: &Vec<f64>, d: &[f64]| if v.is_empty() { d.to_vec() } else { v.clone() };
        let (n, p, sigma, m, gen) = match self.experiment {
            ExperimentKind::ReconstructionAccuracy => (
                or(&g.n, &[500]),
                orf(&g.missingness, &[0.0, 0.25]),
                orf(&g.noise_sigma, &[0.0]),
                or(&g.m, &[2]),
                GeneratorKind::Henon { a: 1.4, b: 0.3 },
            ),
            ExperimentKind::PeriodicityTable => (
                or(&g.n, &[500]),
                orf(&g.missingness, &[0.0]),
                orf(&g.noise_sigma, &[0.0]),
                or(&g.m, &[8]),
                GeneratorKind::Periodic { lambda: None },
            ),
            ExperimentKind::DenoisingStability => (
                or(&g.n, &[50, 100, 500]),
                orf(&g.missingness, &[0.25]),
                orf(&g.noise_sigma, &[0.0, 0.25, 0.5, 2.0]),
                or(&g.m, &[2]),
                two_loop(),
            ),
            ExperimentKind::Convergence => (
                or(&g.n, &[300]),
                orf(&g.missingness, &[0.4, 0.3, 0.2, 0.1, 0.0]),
                orf(&g.noise_sigma, &[0.0]),
                or(&g.m, &[3]),
                two_loop(),
            ),
        };
        ParameterGrid {
            n,
            missingness: p,
            noise_sigma: sigma,
            m,
            tau: or(&g.tau, &[1]),
            threshold: g.threshold,
            generator: Some(g.generator.clone().unwrap_or(gen)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        let g = self.resolved_grid();
        if let Some(p) = g.missingness.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return bad(format!("missingness {p} outside [0, 1)"));
        }
        if let Some(s) = g.noise_sigma.iter().find(|s| !(**s >= 0.0)) {
            return bad(format!("noise sigma {s} is negative"));
        }
        if g.m.contains(&0) || g.tau.contains(&0) || g.n.iter().any(|&n| n < 2) {
            return bad("n must be at least 2 and M, tau positive".into());
        }
        if g.threshold.is_some_and(|t| !(t >= 0.0)) {
            return bad("threshold must be nonnegative".into());
        }
        Ok(())
    }
}

fn two_loop() -> GeneratorKind {
    GeneratorKind::TwoLoop {
        period: 9.7,
        offset: 3.0,
    }
}

/// Completion record for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStatus {
    pub cell: String,
    pub completed: usize,
    pub failed: usize,
    pub first_error: Option<String>,
}

impl CellStatus {
    pub fn is_complete(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionRow {
    pub n: usize,
    pub missingness: f64,
    pub m: usize,
    pub tau: usize,
    pub mean_corr_dim: f64,
    pub stderr: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicityRow {
    pub n: usize,
    pub missingness: f64,
    pub m: usize,
    pub tau: usize,
    pub mean_score: f64,
    pub stderr: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenoisingRow {
    pub sigma: f64,
    pub n: usize,
    pub missingness: f64,
    pub threshold: f64,
    pub mean_bottleneck: f64,
    pub mean_bound: f64,
    /// Largest ratio `d_B / bound` over replications (0 when both vanish).
    pub max_ratio: f64,
    /// Replications with `d_B > 2 · bound`.
    pub bound_breaches: usize,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTableRow {
    pub n: usize,
    pub m: usize,
    pub tau: usize,
    pub missingness: f64,
    pub mean_bottleneck: f64,
    pub stderr: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentTable {
    Reconstruction(Vec<ReconstructionRow>),
    Periodicity(Vec<PeriodicityRow>),
    Denoising(Vec<DenoisingRow>),
    Convergence(Vec<ConvergenceTableRow>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub table: ExperimentTable,
    pub cells: Vec<CellStatus>,
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> Result<String> {
        fn rows<R: Serialize>(rows: &[R]) -> Result<String> {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| ExperimentError::Csv(e.into_error().into()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        match &self.table {
            ExperimentTable::Reconstruction(r) => rows(r),
            ExperimentTable::Periodicity(r) => rows(r),
            ExperimentTable::Denoising(r) => rows(r),
            ExperimentTable::Convergence(r) => rows(r),
        }
    }

    pub fn manifest_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            experiment: &'a str,
            config: &'a ExperimentConfig,
            complete: bool,
            cells: &'a [CellStatus],
        }
        Ok(serde_json::to_string_pretty(&Manifest {
            experiment: self.config.experiment.name(),
            config: &self.config,
            complete: self.cells.iter().all(CellStatus::is_complete),
            cells: &self.cells,
        })?)
    }

    /// Writes `<experiment>.csv` and `manifest.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ExperimentError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let csv_path = dir.join(format!("{}.csv", self.config.experiment.name()));
        std::fs::write(&csv_path, self.to_csv()?).map_err(io(&csv_path))?;
        let manifest = dir.join("manifest.json");
        std::fs::write(&manifest, self.manifest_json()?).map_err(io(&manifest))?;
        Ok(csv_path)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let (table, cells) = match config.experiment {
        ExperimentKind::ReconstructionAccuracy => {
            let (r, c) = reconstruction_accuracy(config);
            (ExperimentTable::Reconstruction(r), c)
        }
        ExperimentKind::PeriodicityTable => {
            let (r, c) = periodicity_table(config);
            (ExperimentTable::Periodicity(r), c)
        }
        ExperimentKind::DenoisingStability => {
            let (r, c) = denoising_stability(config);
            (ExperimentTable::Denoising(r), c)
        }
        ExperimentKind::Convergence => {
            let (r, c) = convergence(config);
            (ExperimentTable::Convergence(r), c)
        }
    };
    Ok(ExperimentOutput {
        config: config.clone(),
        table,
        cells,
    })
}

type RepResult<T> = std::result::Result<T, crate::Error>;

/// Runs `reps` replications in parallel and splits successes from failures.
fn replicate<T: Send>(cell: String, reps: usize, f: impl Fn(usize) -> RepResult<T> + Sync) -> (Vec<T>, CellStatus) {
    let results: Vec<RepResult<T>> = (0..reps).into_par_iter().map(&f).collect();
    let mut ok = Vec::with_capacity(reps);
    let mut first_error = None;
    let mut failed = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                failed += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let status = CellStatus {
        cell,
        completed: ok.len(),
        failed,
        first_error,
    };
    (ok, status)
}

/// Generated series re-indexed onto integer ticks `0..n`.
fn generate_on_ticks(kind: &GeneratorKind, n: usize, seed: u64) -> RepResult<TimeSeries<f64>> {
    let ts = GeneratorSpec::new(kind.clone(), n, seed).generate()?;
    Ok(TimeSeries::uniform(ts.values().to_vec())?)
}

/// Mean correlation dimension of SSE reconstructions of the Hénon series.
pub fn reconstruction_accuracy(config: &ExperimentConfig) -> (Vec<ReconstructionRow>, Vec<CellStatus>) {
    let g = config.resolved_grid();
    let kind = g.generator.clone().expect("resolved");
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (ni, &n) in g.n.iter().enumerate() {
        for (pi, &p) in g.missingness.iter().enumerate() {
            for (mi, &m) in g.m.iter().enumerate() {
                for (ti, &tau) in g.tau.iter().enumerate() {
                    let coords = [config.experiment.id(), ni as u64, pi as u64, mi as u64, ti as u64];
                    let cell = format!("n={n},p={p},M={m},tau={tau}");
                    let (dims, status) = replicate(cell, config.replications, |rep| {
                        let seed = derive_seed(config.seed, &[&coords[..], &[rep as u64]].concat());
                        let ts = generate_on_ticks(&kind, n, seed)?;
                        let observed = apply_missingness(&ts, p, derive_seed(seed, &[1]))?;
                        let out = sse_pipeline(&observed, &SseOptions::new(m, tau))?;
                        let cd = correlation_dimension(&out.embedding, &EpsilonGrid::default(), FitRange::default())?;
                        Ok(cd.slope)
                    });
                    let (mean, stderr) = mean_stderr(&dims);
                    rows.push(ReconstructionRow {
                        n,
                        missingness: p,
                        m,
                        tau,
                        mean_corr_dim: mean,
                        stderr,
                        reps: dims.len(),
                    });
                    cells.push(status);
                }
            }
        }
    }
    (rows, cells)
}

/// Mean periodicity score of SSE reconstructions.
pub fn periodicity_table(config: &ExperimentConfig) -> (Vec<PeriodicityRow>, Vec<CellStatus>) {
    let g = config.resolved_grid();
    let kind = g.generator.clone().expect("resolved");
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (ni, &n) in g.n.iter().enumerate() {
        for (pi, &p) in g.missingness.iter().enumerate() {
            for (mi, &m) in g.m.iter().enumerate() {
                for (ti, &tau) in g.tau.iter().enumerate() {
                    let coords = [config.experiment.id(), ni as u64, pi as u64, mi as u64, ti as u64];
                    let cell = format!("n={n},p={p},M={m},tau={tau}");
                    let (scores, status) = replicate(cell, config.replications, |rep| {
                        let seed = derive_seed(config.seed, &[&coords[..], &[rep as u64]].concat());
                        let ts = generate_on_ticks(&kind, n, seed)?;
                        let observed = apply_missingness(&ts, p, derive_seed(seed, &[1]))?;
                        let out = sse_pipeline(&observed, &SseOptions::new(m, tau))?;
                        Ok(periodicity_score(&out.embedding)?.score)
                    });
                    let (mean, stderr) = mean_stderr(&scores);
                    rows.push(PeriodicityRow {
                        n,
                        missingness: p,
                        m,
                        tau,
                        mean_score: mean,
                        stderr,
                        reps: scores.len(),
                    });
                    cells.push(status);
                }
            }
        }
    }
    (rows, cells)
}

/// Bottleneck distance between clean and denoised SSE diagrams alongside
/// the row-wise bound kernel between noisy and clean embeddings.
pub fn denoising_stability(config: &ExperimentConfig) -> (Vec<DenoisingRow>, Vec<CellStatus>) {
    let g = config.resolved_grid();
    let kind = g.generator.clone().expect("resolved");
    let (m, tau) = (g.m[0], g.tau[0]);
    let params = FiltrationParams::up_to(1);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (si, &sigma) in g.noise_sigma.iter().enumerate() {
        for (ni, &n) in g.n.iter().enumerate() {
            for (pi, &p) in g.missingness.iter().enumerate() {
                let threshold = g.threshold.unwrap_or(9.0 * sigma * sigma);
                // the noise-free sampling is shared across noise levels
                let coords = [config.experiment.id(), ni as u64, pi as u64];
                let cell = format!("sigma={sigma},n={n},p={p}");
                let (pairs, status) = replicate(cell, config.replications, |rep| {
                    let seed = derive_seed(config.seed, &[&coords[..], &[rep as u64]].concat());
                    let ts = generate_on_ticks(&kind, n, seed)?;
                    let clean = apply_missingness(&ts, p, derive_seed(seed, &[1]))?;
                    let noisy = add_noise(&clean, sigma, derive_seed(seed, &[2, si as u64]))?;
                    let denoised = denoise(&noisy, threshold)?;
                    let opts = SseOptions::new(m, tau);
                    let f_clean = sse_pipeline(&clean, &opts)?.embedding;
                    let f_noisy = sse_pipeline(&noisy, &opts)?.embedding;
                    let f_den = sse_pipeline(&denoised, &opts)?.embedding;
                    let d = max_bottleneck(
                        &vr_persistence(&f_clean, &params)?,
                        &vr_persistence(&f_den, &params)?,
                        1,
                    )?;
                    let bound = denoising_bound(&f_noisy, &f_clean)?;
                    Ok((d, bound))
                });
                let ds: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                let bs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                let max_ratio = pairs
                    .iter()
                    .map(|&(d, b)| if d == 0.0 { 0.0 } else { d / b })
                    .fold(0.0, f64::max);
                rows.push(DenoisingRow {
                    sigma,
                    n,
                    missingness: p,
                    threshold,
                    mean_bottleneck: mean_stderr(&ds).0,
                    mean_bound: mean_stderr(&bs).0,
                    max_ratio,
                    bound_breaches: pairs.iter().filter(|&&(d, b)| d > 2.0 * b).count(),
                    reps: pairs.len(),
                });
                cells.push(status);
            }
        }
    }
    (rows, cells)
}

/// SSE-to-TDE bottleneck distance as missingness varies.
pub fn convergence(config: &ExperimentConfig) -> (Vec<ConvergenceTableRow>, Vec<CellStatus>) {
    let g = config.resolved_grid();
    let kind = g.generator.clone().expect("resolved");
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (ni, &n) in g.n.iter().enumerate() {
        for (mi, &m) in g.m.iter().enumerate() {
            for (ti, &tau) in g.tau.iter().enumerate() {
                let coords = [config.experiment.id(), ni as u64, mi as u64, ti as u64];
                let probe = ConvergenceProbe {
                    generator: GeneratorSpec::new(kind.clone(), n, derive_seed(config.seed, &coords)),
                    missingness: g.missingness.clone(),
                    reps: config.replications,
                    seed: derive_seed(config.seed, &[&coords[..], &[1]].concat()),
                    m,
                    tau,
                    max_dim: 1,
                };
                let cell = format!("n={n},M={m},tau={tau}");
                match convergence_probe(&probe) {
                    Ok(table) => {
                        rows.extend(table.into_iter().map(|r| ConvergenceTableRow {
                            n,
                            m,
                            tau,
                            missingness: r.missingness,
                            mean_bottleneck: r.mean_bottleneck,
                            stderr: r.stderr,
                            reps: r.reps,
                        }));
                        cells.push(CellStatus {
                            cell,
                            completed: config.replications,
                            failed: 0,
                            first_error: None,
                        });
                    }
                    Err(e) => cells.push(CellStatus {
                        cell,
                        completed: 0,
                        failed: config.replications,
                        first_error: Some(analysis_error_text(e)),
                    }),
                }
            }
        }
    }
    (rows, cells)
}

fn analysis_error_text(e: analysis::AnalysisError) -> String {
    e.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_validation() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"periodicity-table","replications":2,"seed":3,"grid":{"n":[100],"generator":{"kind":"gaussian","mean":10,"sd":2}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.resolved_grid().m, vec![8]);
        assert!(ExperimentConfig::from_json(r#"{"experiment":"convergence","replications":0}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"experiment":"convergence","replications":1,"grid":{"missingness":[1.0]}}"#
        )
        .is_err());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::PeriodicityTable, 3, 11);
        cfg.grid.n = vec![80];
        cfg.grid.m = vec![4];
        cfg.grid.missingness = vec![0.0, 0.1];
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.manifest_json().unwrap(), b.manifest_json().unwrap());
        assert!(a.to_csv().unwrap().starts_with("n,missingness,m,tau,mean_score,stderr,reps\n"));
    }

    #[test]
    fn noise_free_denoising_is_exact() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::DenoisingStability, 2, 5);
        cfg.grid.noise_sigma = vec![0.0];
        cfg.grid.n = vec![60];
        let (rows, cells) = denoising_stability(&cfg);
        assert!(cells.iter().all(CellStatus::is_complete), "{cells:?}");
        assert_eq!(rows[0].mean_bottleneck, 0.0);
        assert_eq!(rows[0].mean_bound, 0.0);
    }

    #[test]
    fn failing_cells_are_marked() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::PeriodicityTable, 2, 5);
        cfg.grid.n = vec![8];
        cfg.grid.m = vec![8];
        let out = run_experiment(&cfg).unwrap();
        assert!(!out.cells[0].is_complete());
        assert!(out.manifest_json().unwrap().contains("\"complete\": false"));
    }
}
