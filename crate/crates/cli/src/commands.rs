use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use sse_tda::analysis::{
    correlation_dimension, periodicity_score, sse_pipeline, EpsilonGrid, FitRange, SseOptions, SseOutcome,
};
use sse_tda::denoise::{denoise_with, forward_nudft_with, keep_fraction_threshold, FrequencyGrid};
use sse_tda::embedding::tde;
use sse_tda::experiment::{run_experiment, ExperimentConfig};
use sse_tda::persistence::{bottleneck_with, vr_persistence, EssentialPolicy, FiltrationParams, Threshold};
use sse_tda::simulate::{add_noise, apply_missingness, derive_seed, Component, GeneratorKind, GeneratorSpec, WaveShape};
use sse_tda::{
    extract_subsequences, load_csv, rescale_to_grid, DiagramF64, DoubleDouble, EmbeddingF64, IntegerGrid, Scalar,
    TimeSeries, TimeSeriesError, TimeSeriesF64,
};

use crate::exit::InvariantViolation;
use crate::{
    BottleneckArgs, CloudSource, CorrdimArgs, DenoiseArgs, EmbedArgs, EmbedParams, ExperimentArgs, FiltrationArgs,
    Grid, Kind, PersistArgs, PipelineArgs, Precision, ScoreArgs, SeriesInput, SimulateArgs, SubseqArgs,
};

fn load(input: &SeriesInput) -> Result<TimeSeriesF64> {
    load_series(&input.input, &input.time_col, &input.value_col)
}

fn load_series(path: &Path, time_col: &str, value_col: &str) -> Result<TimeSeriesF64> {
    load_csv(path, time_col, value_col).with_context(|| format!("reading series {}", path.display()))
}

fn load_on_grid(input: &SeriesInput) -> Result<(TimeSeriesF64, IntegerGrid<f64>)> {
    let ts = load(input)?;
    rescale_to_grid(&ts, input.tolerance).context("inferring the sampling grid")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

fn sse_options(p: &EmbedParams) -> SseOptions {
    SseOptions {
        r: p.r,
        min_len: p.min_len,
        m: p.m,
        tau: p.tau,
    }
}

fn filtration(f: &FiltrationArgs) -> FiltrationParams<f64> {
    FiltrationParams {
        max_dim: f.max_dim,
        threshold: f.max_threshold.map_or(Threshold::Auto, Threshold::Explicit),
    }
}

/// True when the series fills its grid and `r = 1`, in which case the SSE
/// must coincide with the delay embedding; checks that it does.
fn identical_to_tde(ts: &TimeSeriesF64, opts: &SseOptions, out: &SseOutcome<f64>) -> Result<bool> {
    let t = ts.times();
    let contiguous = (t[t.len() - 1] - t[0]) as usize + 1 == t.len();
    if opts.r != 1 || !contiguous {
        return Ok(false);
    }
    let reference = tde(ts.values(), opts.m, opts.tau)?;
    if reference.to_points() != out.embedding.to_points() {
        return Err(InvariantViolation("SSE of a uniformly sampled series differs from its TDE".into()).into());
    }
    Ok(true)
}

fn write_pca(path: &Path, e: &EmbeddingF64) -> Result<()> {
    let proj = crate::pca::project(&e.to_points(), 3);
    let k = proj.first().map_or(0, Vec::len);
    let mut out = create(path)?;
    let header: Vec<String> = (1..=k).map(|i| format!("pc{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in proj {
        let cells: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn write_diagram(dir: &Path, dgm: &DiagramF64) -> Result<()> {
    write_text(&dir.join("diagram.json"), &dgm.to_json())?;
    let mut out = create(&dir.join("diagram.csv"))?;
    dgm.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn diagram_summary(dgm: &DiagramF64, max_dim: usize) -> Value {
    let dims: Vec<Value> = (0..=max_dim)
        .map(|k| {
            json!({
                "dim": k,
                "finite": dgm.finite_pairs(k).len(),
                "essential": dgm.essential_count(k),
                "max_persistence": dgm.most_persistent(k).filter(|f| !f.is_essential()).map(|f| f.persistence()),
            })
        })
        .collect();
    Value::Array(dims)
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<GeneratorSpec>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => GeneratorSpec::new(generator_kind(&a)?, a.n, a.seed),
    };
    let mut ts = spec.generate()?;
    if a.missing_p > 0.0 {
        ts = apply_missingness(&ts, a.missing_p, derive_seed(spec.seed, &[1]))?;
    }
    if a.noise_sigma > 0.0 {
        ts = add_noise(&ts, a.noise_sigma, derive_seed(spec.seed, &[2]))?;
    }
    let mut out = create(&a.output)?;
    ts.write_csv(&mut out, "time", "value")?;
    out.flush()?;
    let sidecar = a.output.with_extension("json");
    write_json(
        &sidecar,
        &json!({
            "generator": spec,
            "missing_p": a.missing_p,
            "noise_sigma": a.noise_sigma,
            "observations": ts.len(),
        }),
    )?;
    println!("wrote {} observations to {}", ts.len(), a.output.display());
    Ok(())
}

fn generator_kind(a: &SimulateArgs) -> Result<GeneratorKind> {
    let wave = |shape| GeneratorKind::Wave {
        shape,
        period: a.period,
        amplitude: a.amplitude,
        phase: a.phase,
    };
    Ok(match a.kind.expect("clap requires --kind without --spec") {
        Kind::Henon => GeneratorKind::Henon { a: a.a, b: a.b },
        Kind::Periodic => GeneratorKind::Periodic { lambda: a.lambda },
        Kind::Gaussian => GeneratorKind::Gaussian { mean: a.mean, sd: a.sd },
        Kind::Sine => wave(WaveShape::Sine),
        Kind::Square => wave(WaveShape::Square),
        Kind::Sawtooth => wave(WaveShape::Sawtooth),
        Kind::Triangle => wave(WaveShape::Triangle),
        Kind::TwoLoop => GeneratorKind::TwoLoop {
            period: a.period,
            offset: a.offset,
        },
        Kind::SumOfSinusoids => GeneratorKind::SumOfSinusoids {
            dt: a.dt,
            components: a.components.iter().map(|c| parse_component(c)).collect::<Result<_>>()?,
        },
    })
}

fn parse_component(s: &str) -> Result<Component> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("component `{s}` is not `period,amplitude[,phase]`"))?;
    match parts[..] {
        [period, amplitude] => Ok(Component { period, amplitude, phase: 0.0 }),
        [period, amplitude, phase] => Ok(Component { period, amplitude, phase }),
        _ => bail!("component `{s}` is not `period,amplitude[,phase]`"),
    }
}

/// Uses the integer grid when one explains the time stamps, otherwise the
/// raw times.
fn gridded_or_raw(ts: &TimeSeriesF64, tolerance: f64) -> Result<TimeSeriesF64> {
    match rescale_to_grid(ts, tolerance) {
        Ok((g, _)) => Ok(g),
        Err(TimeSeriesError::NoCommonStep { .. }) => Ok(ts.clone()),
        Err(e) => Err(e.into()),
    }
}

fn frequency_grid(g: Grid) -> FrequencyGrid {
    match g {
        Grid::Slots => FrequencyGrid::Slots,
        Grid::Observations => FrequencyGrid::Observations,
    }
}

fn run_denoise<T: Scalar>(
    ts: &TimeSeriesF64,
    threshold: Option<f64>,
    keep_frac: Option<f64>,
    grid: FrequencyGrid,
    spectrum: Option<&Path>,
) -> Result<(Vec<f64>, f64)> {
    let work: TimeSeries<T> = ts.cast();
    let sv = forward_nudft_with(&work, grid)?;
    let cutoff = match (threshold, keep_frac) {
        (Some(t), _) => T::of(t),
        (None, Some(f)) => keep_fraction_threshold(&sv, T::of(f))?,
        (None, None) => bail!("either --threshold or --keep-frac is required"),
    };
    if let Some(path) = spectrum {
        let mut out = create(path)?;
        sv.write_csv(&mut out)?;
        out.flush()?;
    }
    let cleaned = denoise_with(&work, cutoff, grid)?;
    Ok((cleaned.values().iter().map(|v| v.to_f64_lossy()).collect(), cutoff.to_f64_lossy()))
}

pub fn denoise(a: DenoiseArgs) -> Result<()> {
    let ts = load(&a.series)?;
    let work = gridded_or_raw(&ts, a.series.tolerance)?;
    let grid = frequency_grid(a.grid);
    let spectrum = a.spectrum.as_deref();
    let (values, cutoff) = match a.precision {
        Precision::F64 => run_denoise::<f64>(&work, a.threshold, a.keep_frac, grid, spectrum)?,
        Precision::DoubleDouble => run_denoise::<DoubleDouble>(&work, a.threshold, a.keep_frac, grid, spectrum)?,
    };
    let out_ts = ts.with_values(values)?;
    let mut out = create(&a.output)?;
    out_ts.write_csv(&mut out, &a.series.time_col, &a.series.value_col)?;
    out.flush()?;
    println!("{}", json!({"observations": ts.len(), "threshold": cutoff}));
    Ok(())
}

pub fn subseq(a: SubseqArgs) -> Result<()> {
    let (ts, grid) = load_on_grid(&a.series)?;
    let ticks: Vec<i64> = ts.times().iter().map(|&t| t as i64).collect();
    let set = extract_subsequences(&ticks, a.r, a.min_len)?;
    let doc = json!({
        "grid": {"base": grid.base, "step": grid.step},
        "r": a.r,
        "min_len": a.min_len,
        "residual": set.residual_ticks(),
        "subsequences": serde_json::from_str::<Value>(&set.to_json())?,
    });
    write_json(&a.output, &doc)?;
    println!("{}", json!({"subsequences": set.len(), "residual": set.residual_ticks().len()}));
    Ok(())
}

pub fn embed(a: EmbedArgs) -> Result<()> {
    let (ts, _) = load_on_grid(&a.series)?;
    let opts = sse_options(&a.params);
    let out = sse_pipeline(&ts, &opts)?;
    let identical = identical_to_tde(&ts, &opts, &out)?;
    let mut file = create(&a.output)?;
    out.embedding.write_csv(&mut file)?;
    file.flush()?;
    if let Some(p) = &a.pca {
        write_pca(p, &out.embedding)?;
    }
    println!(
        "{}",
        json!({
            "rows": out.embedding.rows(),
            "blocks": out.embedding.tau_per_block().len(),
            "skipped_blocks": out.skipped.len(),
            "identical_to_tde": identical,
        })
    );
    Ok(())
}

fn read_embedding(path: &Path) -> Result<EmbeddingF64> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    EmbeddingF64::read_csv(BufReader::new(file)).with_context(|| format!("reading embedding {}", path.display()))
}

pub fn persist(a: PersistArgs) -> Result<()> {
    let e = read_embedding(&a.input)?;
    let dgm = vr_persistence(&e, &filtration(&a.filtration))?;
    fs::create_dir_all(&a.output_dir).with_context(|| format!("creating {}", a.output_dir.display()))?;
    write_diagram(&a.output_dir, &dgm)?;
    println!("{}", diagram_summary(&dgm, a.filtration.max_dim));
    Ok(())
}

fn read_diagram(path: &Path) -> Result<DiagramF64> {
    let ctx = || format!("reading diagram {}", path.display());
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).with_context(ctx)?;
        Ok(DiagramF64::from_json(&text).with_context(ctx)?)
    } else {
        let file = File::open(path).with_context(ctx)?;
        Ok(DiagramF64::read_csv(BufReader::new(file)).with_context(ctx)?)
    }
}

pub fn bottleneck(a: BottleneckArgs) -> Result<()> {
    let (x, y) = (read_diagram(&a.a)?, read_diagram(&a.b)?);
    let policy = a.cap.map_or(EssentialPolicy::Exclude, EssentialPolicy::Cap);
    let dims: Vec<usize> = match a.dim {
        Some(k) => vec![k],
        None => {
            let top = x.features().iter().chain(y.features()).map(|f| f.dim).max().unwrap_or(0);
            (0..=top).collect()
        }
    };
    let mut by_dim = serde_json::Map::new();
    for k in dims {
        by_dim.insert(k.to_string(), json!(bottleneck_with(&x, &y, k, policy)?));
    }
    println!("{}", json!({ "bottleneck": by_dim }));
    Ok(())
}

fn cloud(src: &CloudSource) -> Result<EmbeddingF64> {
    match (&src.input, &src.embedding) {
        (_, Some(path)) => read_embedding(path),
        (Some(path), None) => {
            let ts = load_series(path, &src.time_col, &src.value_col)?;
            let (ts, _) = rescale_to_grid(&ts, src.tolerance).context("inferring the sampling grid")?;
            Ok(sse_pipeline(&ts, &sse_options(&src.params))?.embedding)
        }
        (None, None) => bail!("either --input or --embedding is required"),
    }
}

pub fn score(a: ScoreArgs) -> Result<()> {
    let e = cloud(&a.source)?;
    println!("{}", serde_json::to_string(&periodicity_score(&e)?)?);
    Ok(())
}

pub fn corrdim(a: CorrdimArgs) -> Result<()> {
    let e = cloud(&a.source)?;
    let result = correlation_dimension(
        &e,
        &EpsilonGrid::Auto { count: a.scales },
        FitRange::Corr {
            lo: a.corr_lo,
            hi: a.corr_hi,
        },
    )?;
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    if let Some(r) = a.reps {
        cfg.replications = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let dir = a
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    cfg.output_dir = Some(dir.clone());
    let output = run_experiment(&cfg)?;
    let csv = output.write_to(&dir)?;
    let incomplete: Vec<&str> = output
        .cells
        .iter()
        .filter(|c| !c.is_complete())
        .map(|c| c.cell.as_str())
        .collect();
    if !incomplete.is_empty() {
        eprintln!("warning: incomplete cells: {}", incomplete.join("; "));
    }
    println!("wrote {}", csv.display());
    Ok(())
}

pub fn pipeline(a: PipelineArgs) -> Result<()> {
    let (mut ts, grid) = load_on_grid(&a.series)?;
    let mut cutoff = None;
    if a.threshold.is_some() || a.keep_frac.is_some() {
        let (values, c) = run_denoise::<f64>(&ts, a.threshold, a.keep_frac, FrequencyGrid::Slots, None)?;
        ts = ts.with_values(values)?;
        cutoff = Some(c);
    }
    let opts = sse_options(&a.params);
    let out = sse_pipeline(&ts, &opts)?;
    let identical = identical_to_tde(&ts, &opts, &out)?;
    let dgm = vr_persistence(&out.embedding, &filtration(&a.filtration))?;
    let score = match periodicity_score(&out.embedding) {
        Ok(s) => serde_json::to_value(s)?,
        Err(e) => json!({ "error": e.to_string() }),
    };

    let dir = &a.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_text(&dir.join("subsequences.json"), &out.subsequences.to_json())?;
    let mut f = create(&dir.join("embedding.csv"))?;
    out.embedding.write_csv(&mut f)?;
    f.flush()?;
    write_diagram(dir, &dgm)?;
    write_json(&dir.join("score.json"), &score)?;
    write_pca(&dir.join("pca.csv"), &out.embedding)?;
    let summary = json!({
        "observations": ts.len(),
        "grid": {"base": grid.base, "step": grid.step},
        "r": opts.r,
        "min_len": opts.min_len.unwrap_or_else(|| opts.effective_min_len()),
        "M": opts.m,
        "tau": opts.tau,
        "denoise_threshold": cutoff,
        "subsequences": out.subsequences.len(),
        "skipped_blocks": out.skipped.iter().map(|s| json!({"block": s.block, "len": s.len})).collect::<Vec<_>>(),
        "rows": out.embedding.rows(),
        "identical_to_tde": identical,
        "diagram": diagram_summary(&dgm, a.filtration.max_dim),
    });
    write_json(&dir.join("summary.json"), &summary)?;
    println!("{summary}");
    Ok(())
}
