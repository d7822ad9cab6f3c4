//! `topoclass`: generate data, train tracing networks, check separability,
//! build witnesses and separators, and plot activation traces.

/// `println!` that ignores a closed stdout (e.g. when piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "topoclass",
    version,
    about = "Neural networks as topological classifiers"
)]
pub struct Cli {
    /// Seed for every random choice (data, initialization, shuffling).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Output format for commands that can write either.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a labeled point cloud (annulus or concentric shells).
    Gen(GenArgs),
    /// Train a ReLU/softmax network with SGD on cross-entropy.
    Train(TrainArgs),
    /// Trace a dataset through a network and plot every stage.
    Trace(TraceArgs),
    /// Check whether a network separates the classes of a dataset.
    CheckSep(CheckSepArgs),
    /// Build a pair of points a bottleneck first layer cannot tell apart.
    Witness(WitnessArgs),
    /// Train networks with first layers of several widths and compare.
    SweepBottleneck(SweepArgs),
    /// Embed a point cloud with Isomap.
    Isomap(IsomapArgs),
    /// Build a distance-ratio separator for a dataset and sample it.
    Urysohn(UrysohnArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SvgArgs {
    /// SVG width in pixels.
    #[arg(long, default_value_t = 480.0)]
    pub svg_width: f64,
    /// SVG height in pixels.
    #[arg(long, default_value_t = 480.0)]
    pub svg_height: f64,
    /// Blank border around the plot area in pixels.
    #[arg(long, default_value_t = 24.0)]
    pub svg_margin: f64,
    /// Base point radius in pixels.
    #[arg(long, default_value_t = 2.5)]
    pub point_radius: f64,
    /// Comma-separated class colors, reused cyclically.
    #[arg(long, default_value = svg::DEFAULT_COLORS)]
    pub colors: String,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("kind").required(true).args(["annulus", "shells"])))]
pub struct GenArgs {
    /// Disc of radius 0.9 inside the ring 1 <= r <= 2 in the plane.
    #[arg(long)]
    pub annulus: bool,
    /// Ball and shell (or several bands) in any dimension.
    #[arg(long)]
    pub shells: bool,
    /// Samples per class.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Ambient dimension (shells only).
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.9)]
    pub inner_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub outer_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub outer_max: f64,
    /// Radial bands `lo:hi,lo:hi,...`, one class each (shells only).
    #[arg(long, value_delimiter = ',')]
    pub bands: Vec<String>,
    /// Output file.
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct TrainOpts {
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Stop once training accuracy reaches this value.
    #[arg(long, default_value_t = 0.999)]
    pub target: f64,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("arch").required(true).args(["paper_net", "dims"])))]
pub struct TrainArgs {
    /// Dataset (JSON).
    pub data: PathBuf,
    /// Use the 2-5-5-2-2-2 ReLU network with a softmax output layer.
    #[arg(long)]
    pub paper_net: bool,
    /// Layer widths, input first, e.g. `2,1,2`.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Activation per layer; defaults to ReLU everywhere but a softmax output.
    #[arg(long, value_delimiter = ',')]
    pub acts: Vec<String>,
    #[command(flatten)]
    pub opts: TrainOpts,
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
    #[arg(long, default_value = "history.csv")]
    pub history: PathBuf,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    /// Isomap neighbourhood size for stages of dimension above 3.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Also record `W x + b` before each activation.
    #[arg(long)]
    pub pre_activation: bool,
    /// Neighbourhood size used for per-class component counts.
    #[arg(long, default_value_t = 10)]
    pub component_k: usize,
    /// Relative singular value cutoff for the linear rank.
    #[arg(long, default_value_t = 1e-6)]
    pub rank_tol: f64,
    /// Index file describing every stage.
    #[arg(long, default_value = "trace.json")]
    pub index: PathBuf,
    #[command(flatten)]
    pub svg: SvgArgs,
}

#[derive(Args, Debug)]
pub struct CheckSepArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    /// Criteria to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "voronoi,disc")]
    pub criteria: Vec<String>,
    /// Number of violations printed.
    #[arg(long, default_value_t = 10)]
    pub show: usize,
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    pub model: PathBuf,
    /// Norm of the witness point labeled as the inner class.
    #[arg(long, default_value_t = 0.5)]
    pub inner_r: f64,
    /// Norm of the witness point labeled as the outer class.
    #[arg(long, default_value_t = 1.5)]
    pub outer_r: f64,
    #[arg(long, default_value = "witness.json")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub data: PathBuf,
    /// First-layer widths.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub widths: Vec<usize>,
    /// Hidden widths after the first layer.
    #[arg(long, value_delimiter = ',', default_value = "16,16")]
    pub hidden: Vec<usize>,
    /// Runs per width; run `r` uses seed `--seed + r`.
    #[arg(long, default_value_t = 5)]
    pub runs: u64,
    /// Accuracy that counts a run as a success.
    #[arg(long, default_value_t = 0.99)]
    pub success: f64,
    #[command(flatten)]
    pub opts: TrainOpts,
    #[arg(long, default_value = "sweep.csv")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct IsomapArgs {
    pub data: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub target_dim: usize,
    /// Double k until the neighbour graph is connected.
    #[arg(long)]
    pub grow_k: bool,
    /// Embed repeated points once.
    #[arg(long)]
    pub merge_duplicates: bool,
    /// Embedding file; the extension follows `--format` when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "embedding.svg")]
    pub svg_file: PathBuf,
    #[command(flatten)]
    pub svg: SvgArgs,
}

#[derive(Args, Debug)]
pub struct UrysohnArgs {
    pub data: PathBuf,
    /// Lower grid bound on both axes (2-D data only).
    #[arg(long, default_value_t = -2.5, allow_negative_numbers = true)]
    pub grid_min: f64,
    /// Upper grid bound on both axes.
    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub grid_max: f64,
    /// Grid nodes per axis.
    #[arg(long, default_value_t = 101)]
    pub grid_n: usize,
    #[arg(long, default_value = "urysohn_samples.csv")]
    pub samples: PathBuf,
    #[arg(long, default_value = "urysohn_grid.csv")]
    pub grid: PathBuf,
    #[arg(long, default_value = "urysohn.svg")]
    pub svg_file: PathBuf,
    #[command(flatten)]
    pub svg: SvgArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
