use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrfdens_core::pixeldiag::Pixel;
use serde::Serialize;

pub const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (commit ",
    env!("MRFDENS_COMMIT"),
    ", ",
    env!("MRFDENS_TARGET"),
    ", ",
    env!("MRFDENS_PROFILE"),
    ")"
);

#[derive(Debug, Parser)]
#[command(
    name = "mrfdens",
    version = VERSION,
    about = "Markov-random-field structured density estimation",
    arg_required_else_help = true
)]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximal cliques of a (power) graph.
    Cliques(CliquesArgs),
    /// Minimum-distance selection among candidate histograms.
    Scheffe(ScheffeArgs),
    /// Fit a clique-product ReLU network by projected SGD.
    FitNn(FitNnArgs),
    /// Fit a histogram estimator (product ERM, full grid or cover tournament).
    FitHist(FitHistArgs),
    /// Run a convergence-rate experiment from a JSON config.
    Rate(RateArgs),
    /// Draw samples from a synthetic Markov density.
    SynthSample(SynthArgs),
    /// Pixel-pair correlation diagnostics on a PGM corpus.
    PixelDiag(PixelArgs),
    /// Check the clique-potential reconstruction of a synthetic density.
    HcCheck(HcArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    Path,
    Grid,
    GridDiag,
    File,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    #[arg(long, value_enum)]
    pub family: GraphFamily,
    /// `D` for paths, `RxC` for grids; optional vertex count for files.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub power: usize,
    /// Edge list, one 1-based `u v` pair per line.
    #[arg(long)]
    pub edges_file: Option<PathBuf>,
    #[arg(long, default_value_t = mrfdens_core::graph::DEFAULT_CLIQUE_CEILING)]
    pub clique_ceiling: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CliquesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScheffeArgs {
    /// JSON array of histograms, or an object with a `candidates` array.
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value_t = mrfdens_core::histfactor::DEFAULT_REFINEMENT_BUDGET)]
    pub refinement_budget: u128,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistMethod {
    /// Product-constrained surrogate ERM over the maximal cliques.
    Product,
    /// Unconstrained histogram on the full grid.
    Full,
    /// Scheffé tournament over quantized cover products.
    Vn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMode {
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitHistArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum, default_value_t = HistMethod::Product)]
    pub method: HistMethod,
    /// Bins per axis; defaults to the method's schedule.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Weight cap C.
    #[arg(long)]
    pub cap: Option<f64>,
    /// Multiplier on the bin-count schedule.
    #[arg(long, default_value_t = 1.0)]
    pub schedule_constant: f64,
    /// Cover step for the tournament; defaults to 1/b.
    #[arg(long)]
    pub cover_eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = CoverMode::Auto)]
    pub cover_mode: CoverMode,
    /// Candidate budget (exhaustive) or draw count (sampled).
    #[arg(long, default_value_t = mrfdens_core::scheffe::DEFAULT_CANDIDATE_BUDGET as usize)]
    pub candidates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = mrfdens_core::histfactor::DEFAULT_REFINEMENT_BUDGET)]
    pub refinement_budget: u128,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// Uniform Monte Carlo pool of n' points.
    Mc,
    /// Midpoint grid with q points per axis.
    Exact,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitNnArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    /// Training config JSON `{seed, lr, steps, batch, norm_batch, norm_mode, prune}`;
    /// replaces the training flags below.
    #[arg(long, conflicts_with_all = ["seed", "lr", "steps", "batch", "norm_batch", "norm", "n_prime", "norm_q", "prune"])]
    pub train_config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 64)]
    pub norm_batch: usize,
    #[arg(long, value_enum, default_value_t = NormKind::Mc)]
    pub norm: NormKind,
    /// MC pool size; defaults to 4n.
    #[arg(long)]
    pub n_prime: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub norm_q: usize,
    /// Magnitude pruning to the sparsity budget after every step.
    #[arg(long)]
    pub prune: bool,
    #[arg(long, default_value_t = 2)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 16)]
    pub max_width: usize,
    /// Output clip F; defaults to 1 + sqrt(d).
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for per-cell CSV and gnuplot median files.
    #[arg(long)]
    pub plots_dir: Option<PathBuf>,
    /// Worker threads; overrides the config, defaults to available cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthFamily {
    Chain,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `1 + a cos(pi (u - v))`
    Cosine,
    /// `exp(-beta (u - v)^2)`
    Gaussian,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TruthArgs {
    #[arg(long, value_enum, default_value_t = TruthFamily::Chain)]
    pub family: TruthFamily,
    /// Chain length.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Grid size `RxC`.
    #[arg(long)]
    pub dims: Option<String>,
    /// Grid graph power.
    #[arg(long, default_value_t = 1)]
    pub power: usize,
    #[arg(long, value_enum, default_value_t = PotentialKind::Cosine)]
    pub potential: PotentialKind,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Quadrature points per axis for the normaliser.
    #[arg(long)]
    pub q: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub truth: TruthArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gibbs burn-in, in full sweeps.
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    /// Gibbs thinning, in full sweeps.
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Sample CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write each grid sample as an 8-bit PGM image here.
    #[arg(long)]
    pub pgm_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionKind {
    /// Images whose conditioning pixel is within a tolerance of its median.
    Tolerance,
    /// The k images whose conditioning pixel is nearest its median.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimsPolicyArg {
    Reject,
    Crop,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PixelArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value = "8,8")]
    pub anchor: Pixel,
    /// Conditioning pixel.
    #[arg(long, default_value = "9,8")]
    pub neighbor: Pixel,
    /// Pixels paired with the anchor.
    #[arg(long, num_args = 1.., default_values = ["8,9", "8,10", "9,12", "14,28"])]
    pub pairs: Vec<Pixel>,
    #[arg(long, value_enum, default_value_t = SelectionKind::Tolerance)]
    pub selection: SelectionKind,
    /// Tolerance window; defaults to half the IQR of the conditioning pixel.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Required image size `RxC`; defaults to the first image.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, value_enum, default_value_t = DimsPolicyArg::Reject)]
    pub dims_policy: DimsPolicyArg,
    /// Also tabulate correlations over Chebyshev rings up to this radius.
    #[arg(long)]
    pub profile_radius: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HcArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub truth: TruthArgs,
    /// Table nodes per axis.
    #[arg(long, default_value_t = mrfdens_core::hcfactor::DEFAULT_TABLE_RESOLUTION)]
    pub table_q: usize,
    /// Largest acceptable relative reconstruction error.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Write the tabulated potentials here.
    #[arg(long)]
    pub potentials_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
