//! `sse-tda` command-line front end.

mod commands;
mod exit;
mod pca;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "sse-tda",
    version,
    about = "Subsequence embeddings of irregular time series and their persistent homology",
    after_help = exit::HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic series (CSV) plus a sidecar JSON describing it.
    Simulate(SimulateArgs),
    /// Fourier-threshold a series and write the reconstruction.
    Denoise(DenoiseArgs),
    /// Extract uniformly spaced subsequences and write them as JSON.
    Subseq(SubseqArgs),
    /// Subsequence embedding of a series, written as CSV.
    Embed(EmbedArgs),
    /// Vietoris-Rips persistence diagram of an embedding CSV.
    Persist(PersistArgs),
    /// Bottleneck distance between two diagrams.
    Bottleneck(BottleneckArgs),
    /// Periodicity score of a series or embedding.
    Score(ScoreArgs),
    /// Correlation dimension of a series or embedding.
    Corrdim(CorrdimArgs),
    /// Run a replicated experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Full run: rescale, optional denoise, SSE, persistence, score, PCA.
    Pipeline(PipelineArgs),
}

#[derive(Args, Clone)]
pub struct SeriesInput {
    /// Series CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    #[arg(long, default_value = "value")]
    pub value_col: String,
    /// Absolute tolerance when inferring the common time step.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Args, Clone, Copy)]
pub struct EmbedParams {
    /// Regularity: common tick difference inside a subsequence.
    #[arg(long, default_value_t = 1)]
    pub r: i64,
    /// Minimum subsequence length (default: shortest embeddable length).
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Embedding dimension minus one.
    #[arg(long = "M", default_value_t = 3)]
    pub m: usize,
    /// Delay, in subsequence steps.
    #[arg(long, default_value_t = 1)]
    pub tau: usize,
}

#[derive(Args, Clone, Copy)]
pub struct FiltrationArgs {
    #[arg(long, default_value_t = 1)]
    pub max_dim: usize,
    /// Largest filtration value (default: enclosing radius, which loses nothing).
    #[arg(long)]
    pub max_threshold: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Kind {
    Henon,
    Periodic,
    Gaussian,
    Sine,
    Square,
    Sawtooth,
    Triangle,
    SumOfSinusoids,
    TwoLoop,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "spec")]
    pub kind: Option<Kind>,
    /// Generator spec as JSON (overrides --kind and its parameters).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.4)]
    pub a: f64,
    #[arg(long, default_value_t = 0.3)]
    pub b: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mean: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sd: f64,
    #[arg(long, default_value_t = 10.0)]
    pub period: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phase: f64,
    #[arg(long, default_value_t = 3.0)]
    pub offset: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Sinusoid as `period,amplitude[,phase]`; repeatable.
    #[arg(long = "component")]
    pub components: Vec<String>,
    /// Drop each point independently with this probability.
    #[arg(long, default_value_t = 0.0)]
    pub missing_p: f64,
    /// Standard deviation of added Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Grid {
    /// One frequency per grid slot.
    Slots,
    /// One frequency per observation.
    Observations,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Precision {
    F64,
    DoubleDouble,
}

#[derive(Args)]
pub struct DenoiseArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    /// Zero every bin whose PSD is below this value.
    #[arg(long, conflicts_with = "keep_frac", required_unless_present = "keep_frac")]
    pub threshold: Option<f64>,
    /// Keep the strongest bins carrying this fraction of the PSD mass.
    #[arg(long)]
    pub keep_frac: Option<f64>,
    #[arg(long, value_enum, default_value = "slots")]
    pub grid: Grid,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the spectrum (f, re, im, psd) here.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
}

#[derive(Args)]
pub struct SubseqArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    #[arg(long, default_value_t = 1)]
    pub r: i64,
    #[arg(long, default_value_t = 2)]
    pub min_len: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    #[command(flatten)]
    pub params: EmbedParams,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the top three principal components here.
    #[arg(long)]
    pub pca: Option<PathBuf>,
}

#[derive(Args)]
pub struct PersistArgs {
    /// Embedding CSV (header x0..xM).
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub filtration: FiltrationArgs,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Args)]
pub struct BottleneckArgs {
    /// Diagram file (.json or .csv).
    pub a: PathBuf,
    pub b: PathBuf,
    /// Only this homology dimension (default: every dimension present).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Compare essential classes with their deaths capped at this value.
    #[arg(long)]
    pub cap: Option<f64>,
}

#[derive(Args)]
pub struct CloudSource {
    /// Series CSV, embedded with the SSE parameters.
    #[arg(long, conflicts_with = "embedding", required_unless_present = "embedding")]
    pub input: Option<PathBuf>,
    /// Precomputed embedding CSV.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    #[arg(long, default_value = "value")]
    pub value_col: String,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[command(flatten)]
    pub params: EmbedParams,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub source: CloudSource,
}

#[derive(Args)]
pub struct CorrdimArgs {
    #[command(flatten)]
    pub source: CloudSource,
    /// Number of log-spaced scales.
    #[arg(long, default_value_t = 50)]
    pub scales: usize,
    #[arg(long, default_value_t = 0.005)]
    pub corr_lo: f64,
    #[arg(long, default_value_t = 0.25)]
    pub corr_hi: f64,
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Override the number of replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Override the base seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    #[command(flatten)]
    pub params: EmbedParams,
    #[command(flatten)]
    pub filtration: FiltrationArgs,
    /// Denoise first, zeroing bins with PSD below this value.
    #[arg(long, conflicts_with = "keep_frac")]
    pub threshold: Option<f64>,
    /// Denoise first, keeping this fraction of the PSD mass.
    #[arg(long)]
    pub keep_frac: Option<f64>,
    #[arg(long)]
    pub output_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Denoise(a) => commands::denoise(a),
        Command::Subseq(a) => commands::subseq(a),
        Command::Embed(a) => commands::embed(a),
        Command::Persist(a) => commands::persist(a),
        Command::Bottleneck(a) => commands::bottleneck(a),
        Command::Score(a) => commands::score(a),
        Command::Corrdim(a) => commands::corrdim(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Pipeline(a) => commands::pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
