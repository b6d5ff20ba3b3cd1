use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gkdr::data::SynthKind;
use gkdr::model_selection::Task;
use gkdr::Method;

#[derive(Debug, Parser)]
#[command(name = "gkdr", version, about = "Gradient-based kernel dimension reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a projection and write it as CSV plus a JSON report.
    Fit(FitArgs),
    /// Cross-validate the bandwidth multiplier and regularization.
    Cv(CvArgs),
    /// Replicated synthetic benchmark.
    Bench(BenchArgs),
    /// kNN error of a fitted projection on held-out data.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Gkdr,
    GkdrI,
    GkdrV,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gkdr => Method::Gkdr,
            MethodArg::GkdrI => Method::GkdrI,
            MethodArg::GkdrV => Method::GkdrV,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Regression,
    Classification,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Regression => Task::Regression,
            TaskArg::Classification => Task::Classification,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
    Quadratic,
}

impl From<SynthArg> for SynthKind {
    fn from(s: SynthArg) -> Self {
        match s {
            SynthArg::A => SynthKind::A,
            SynthArg::B => SynthKind::B,
            SynthArg::Quadratic => SynthKind::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "synth")]
    pub input: Option<PathBuf>,
    /// Name of the response column in --input.
    #[arg(long, default_value = "label")]
    pub label: String,
    #[arg(long, value_enum, default_value = "classification")]
    pub task: TaskArg,
    /// Synthetic dataset instead of a file (always regression).
    #[arg(long, value_enum)]
    pub synth: Option<SynthArg>,
    /// Sample size for --synth.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Z-score the features. Defaults to true for CSV input, false for
    /// synthetic data.
    #[arg(long)]
    pub standardize: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Target dimension.
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value = "gkdr")]
    pub method: MethodArg,
    /// Input bandwidth. Defaults to --multiplier times the median distance.
    #[arg(long)]
    pub sigma_x: Option<f64>,
    /// Output bandwidth. Defaults to the median distance of the response.
    #[arg(long)]
    pub sigma_y: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub multiplier: f64,
    #[command(flatten)]
    pub variant: VariantArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VariantArgs {
    /// Factor the Gram matrices by incomplete Cholesky (automatic for n > 2000).
    #[arg(long)]
    pub low_rank: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub ichol_tol: f64,
    #[arg(long)]
    pub max_rank: Option<usize>,
    /// gKDR-i dimensions, e.g. "6,4,3,2,1".
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<usize>>,
    /// gKDR-v block size.
    #[arg(long)]
    pub block_size: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Bandwidth multipliers; default 8 log-spaced values in [0.5, 10].
    #[arg(long, value_delimiter = ',')]
    pub multipliers: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "1e-7")]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Report path; defaults to <out-dir>/report.json.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Choose the multiplier and epsilon by cross-validation first.
    #[arg(long)]
    pub cv: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Projection path; defaults to <out-dir>/projection.csv.
    #[arg(long)]
    pub projection: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value = "gkdr")]
    pub method: MethodArg,
    #[command(flatten)]
    pub variant: VariantArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub dataset: SynthArg,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "gkdr")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Worker threads for replications; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Skip CV and use this multiplier for every replication.
    #[arg(long)]
    pub fixed_multiplier: Option<f64>,
    #[command(flatten)]
    pub variant: VariantArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Projection CSV written by `fit`.
    #[arg(long)]
    pub projection: PathBuf,
    /// Training CSV (the kNN reference set).
    #[arg(long)]
    pub train: PathBuf,
    /// Test CSV. Without it, --test-fraction of --train is held out.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long, default_value = "label")]
    pub label: String,
    #[arg(long, value_enum, default_value = "classification")]
    pub task: TaskArg,
    /// Neighbours; defaults to 7 for two classes and 5 otherwise.
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub standardize: bool,
    /// Projected test coordinates; defaults to <out-dir>/projected.csv.
    #[arg(long)]
    pub projected_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}
