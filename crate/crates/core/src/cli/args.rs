use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "deepfactor", version, about = "Deep fundamental factor models")]
pub struct Cli {
    /// Base RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Flat TOML file whose keys are flag names; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log level for standard error.
    #[arg(long = "log-level", global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset or factor panel.
    Gen(GenArgs),
    /// Fit a network to a dataset, or a two-step GLS fit to a panel.
    Train(TrainCmdArgs),
    /// Select hidden units and penalties by k-fold cross-validation.
    Tune(TuneArgs),
    /// Sensitivities, interactions and baseline importances of a fitted model.
    Interpret(InterpretArgs),
    /// Rolling-window backtest on a factor panel.
    Backtest(BacktestArgs),
    /// Chernoff bound sweeps and ReLU Jacobian moment checks.
    Bounds(BoundsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Train(_) => "train",
            Command::Tune(_) => "tune",
            Command::Interpret(_) => "interpret",
            Command::Backtest(_) => "backtest",
            Command::Bounds(_) => "bounds",
        }
    }
}

pub const COMMANDS: [&str; 6] = ["gen", "train", "tune", "interpret", "backtest", "bounds"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum GenKind {
    Linear2,
    Step10,
    Friedman,
    HetPanel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum NoiseKind {
    Constant,
    LogUniform,
    Outlier,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Number of samples (linear2, step10, friedman).
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Noise scale: Gaussian sd, or the uniform half-width for step10.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Panel dates.
    #[arg(long = "T", default_value_t = 120)]
    pub t: usize,
    /// Panel assets.
    #[arg(long = "N", default_value_t = 218)]
    pub assets: usize,
    /// Panel factors.
    #[arg(long = "K", default_value_t = 6)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "log_uniform")]
    pub noise: NoiseKind,
    #[arg(long = "noise-min", default_value_t = 0.02)]
    pub noise_min: f64,
    #[arg(long = "noise-max", default_value_t = 0.12)]
    pub noise_max: f64,
    /// Outlier asset index and volatility multiplier.
    #[arg(long = "outlier-asset", default_value_t = 0)]
    pub outlier_asset: usize,
    #[arg(long = "outlier-factor", default_value_t = 10.0)]
    pub outlier_factor: f64,
    #[arg(long = "signal-scale", default_value_t = 0.02)]
    pub signal_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub interaction: f64,
    #[arg(long, default_value_t = 0.5)]
    pub curvature: f64,
}

#[derive(Debug, Args, Clone)]
pub struct TrainFlags {
    /// Hidden layer widths, comma separated; `linear` for none.
    #[arg(long, default_value = "10")]
    pub arch: String,
    #[arg(long, default_value = "tanh")]
    pub activation: String,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.0)]
    pub l1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    /// Initialize uniformly on [-s, s] instead of the Glorot range.
    #[arg(long = "init-scale")]
    pub init_scale: Option<f64>,
    #[arg(long = "penalize-bias")]
    pub penalize_bias: bool,
}

#[derive(Debug, Args, Clone)]
pub struct GlsFlags {
    #[arg(long = "variance-floor", default_value_t = crate::gls::VARIANCE_FLOOR)]
    pub variance_floor: f64,
    /// Subtract per-asset mean residuals when estimating variances.
    #[arg(long)]
    pub centered: bool,
    /// Start the weighted refit from the unweighted fit.
    #[arg(long = "warm-start")]
    pub warm_start: bool,
    /// Fit on raw returns instead of window-standardized returns.
    #[arg(long = "raw-targets")]
    pub raw_targets: bool,
}

#[derive(Debug, Args, Clone)]
pub struct PanelFlags {
    /// Drop assets with a smaller fraction of complete rows.
    #[arg(long = "min-coverage", default_value_t = 0.8)]
    pub min_coverage: f64,
    /// Use exposures as given instead of standardizing each date.
    #[arg(long = "no-standardize")]
    pub no_standardize: bool,
}

#[derive(Debug, Args)]
pub struct TrainCmdArgs {
    /// Dataset CSV (features, then `y`).
    #[arg(long, conflicts_with = "panel", required_unless_present = "panel")]
    pub data: Option<PathBuf>,
    /// Factor panel CSV; fitted pooled with two-step GLS.
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub gls: GlsFlags,
    #[command(flatten)]
    pub panel_flags: PanelFlags,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Candidate architectures separated by `;`, each a comma list or `linear`.
    #[arg(long, default_value = "2;4;8;16")]
    pub hidden: String,
    #[arg(long = "l1-grid", default_value = "0")]
    pub l1_grid: String,
    #[arg(long = "l2-grid", default_value = "0")]
    pub l2_grid: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Jacobian,
    Hessian,
    Garson,
    Olden,
    Pdp,
}

#[derive(Debug, Args)]
pub struct InterpretArgs {
    /// Network JSON written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset CSV whose feature rows are the evaluation points.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "jacobian")]
    pub method: Method,
    /// Rank inputs by median instead of mean sensitivity.
    #[arg(long)]
    pub median: bool,
    #[arg(long = "pdp-points", default_value_t = 50)]
    pub pdp_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Model,
    Linear,
    Random,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value_t = 24)]
    pub window: usize,
    /// Portfolio sizes, comma separated.
    #[arg(long, default_value = "25,50,100")]
    pub sizes: String,
    #[arg(long, value_enum, default_value = "model")]
    pub mode: ModeArg,
    #[arg(long = "random-trials", default_value_t = 100)]
    pub random_trials: usize,
    /// CSV `date,ret`; the equal-weighted universe if absent.
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub gls: GlsFlags,
    #[command(flatten)]
    pub panel_flags: PanelFlags,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Write the upper-tail bound over a (mu, delta) grid.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value = "0.5,1,2,4")]
    pub mu: String,
    #[arg(long = "delta-max", default_value_t = 5.0)]
    pub delta_max: f64,
    #[arg(long = "delta-steps", default_value_t = 100)]
    pub delta_steps: usize,
    /// Indicator coefficients a_k for a Bernoulli-sum check.
    #[arg(long)]
    pub coefficients: Option<String>,
    /// Indicator probabilities p_k.
    #[arg(long)]
    pub probabilities: Option<String>,
    /// ReLU network JSON (one hidden layer, scalar input) for a variance check.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
}
