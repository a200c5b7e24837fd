use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kernelscope::{BinarizeMode, Embedding};

#[derive(Parser, Debug)]
#[command(name = "kernelscope", version, about = "Screen datasets for potential quantum prediction advantage")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Embed inputs into statevectors and export 1-RDM Pauli features.
    Embed(EmbedArgs),
    /// Build Gram matrices and write them in binary (and optionally CSV) form.
    Gram(GramArgs),
    /// Tabulate d_eff, s, g_gen and g_tra over the full λ grid.
    Geometry(GeometryArgs),
    /// Engineer labels that separate a reference kernel from the classical suite.
    Engineer(EngineerArgs),
    /// Cross-validated kernel ridge training and held-out evaluation.
    Learn(LearnArgs),
    /// Run the screening flowchart and emit a verdict per quantum kernel.
    Screen(ScreenArgs),
    /// Discrete-logarithm task: quadratic projected kernel against a one-hot kernel.
    DlogDemo(DlogArgs),
    /// Computational-basis encoding where the fidelity kernel cannot generalize.
    AppendixGDemo(AppendixGArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Dataset CSV (x_0..x_{n-1},y) or a directory holding fashion-MNIST IDX files.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "e2", value_parser = parse_embedding)]
    pub embedding: Embedding,
    /// Qubit count (input dimension after PCA).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of data points.
    #[arg(long = "N")]
    pub n_points: Option<usize>,
    /// Comma-separated kernel names.
    #[arg(long, value_delimiter = ',')]
    pub kernels: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Absolute RBF γ values; defaults to the variance-scaled grid.
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "KERNELSCOPE_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_embedding(s: &str) -> Result<Embedding, String> {
    s.parse().map_err(|e: kernelscope::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<BinarizeMode, String> {
    s.parse().map_err(|e: kernelscope::Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct GramArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write each Gram matrix as headerless CSV.
    #[arg(long)]
    pub csv: bool,
    #[command(flatten)]
    pub shadow: ShadowArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ShadowArgs {
    /// Measurement records per datum for the shadow kernel.
    #[arg(long, default_value_t = 500)]
    pub shadows: usize,
    #[arg(long, default_value_t = 1.0)]
    pub shadow_gamma: f64,
}

#[derive(Args, Debug)]
pub struct GeometryArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub shadow: ShadowArgs,
}

#[derive(Args, Debug)]
pub struct EngineerArgs {
    #[command(flatten)]
    pub common: Common,
    /// Kernel the labels are engineered for.
    #[arg(long, default_value = "projected_gaussian")]
    pub reference: String,
    #[arg(long, default_value = "sign_noise", value_parser = parse_mode)]
    pub mode: BinarizeMode,
    #[arg(long, default_value_t = kernelscope::engineer::DEFAULT_NOISE_P)]
    pub noise_p: f64,
    #[arg(long, default_value_t = kernelscope::engineer::DEFAULT_S_TRA_CAP)]
    pub s_tra_cap: f64,
    /// Training rows recorded in the exported split.
    #[arg(long)]
    pub train: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long, default_value_t = kernelscope::learn::DEFAULT_FOLDS)]
    pub folds: usize,
    /// Force `regression` or `classification` (default: inferred from labels).
    #[arg(long)]
    pub task: Option<String>,
    /// Replace dataset labels with QNN labels.
    #[arg(long)]
    pub relabel: bool,
}

#[derive(Args, Debug)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub common: Common,
    /// Qubit counts to sweep; overrides --n.
    #[arg(long, value_delimiter = ',')]
    pub n_sweep: Option<Vec<usize>>,
    #[arg(long, default_value_t = kernelscope::geometry::DEFAULT_G_TRA_CAP)]
    pub g_tra_cap: f64,
    #[arg(long, default_value_t = kernelscope::geometry::DEFAULT_G_THRESHOLD)]
    pub threshold: f64,
    /// Tr(O²) of the target observable; QNN-labeled data uses 2^qubits.
    #[arg(long)]
    pub observable_frobenius: Option<f64>,
    /// Replace dataset labels with QNN labels.
    #[arg(long)]
    pub relabel: bool,
    #[arg(long)]
    pub no_plots: bool,
    #[command(flatten)]
    pub shadow: ShadowArgs,
}

#[derive(Args, Debug)]
pub struct DlogArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 59)]
    pub p: u64,
    #[arg(long, default_value_t = 2)]
    pub g: u64,
    /// Interval offset; drawn per repetition when omitted.
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long, default_value_t = 30)]
    pub reps: u64,
    #[arg(long, default_value_t = 100_000)]
    pub max_epochs: usize,
}

#[derive(Args, Debug)]
pub struct AppendixGArgs {
    #[command(flatten)]
    pub common: Common,
    /// Held-out sample size when 2^n is too large to enumerate.
    #[arg(long, default_value_t = 4096)]
    pub test: usize,
}
