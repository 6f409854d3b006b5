use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "voxtrav", version, about = "Per-voxel traversability estimation pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// `key = value` pipeline and scene configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Voxel edge length in metres.
    #[arg(long, global = true)]
    pub resolution: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// One worker thread, for bit-reproducible runs.
    #[arg(long, global = true)]
    pub single_thread: bool,
    /// Repeat for more logging.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scene, drive the mission and write logs and oracle labels.
    Sim(SimArgs),
    /// Fuse a ray log into a voxel map.
    Map(MapArgs),
    /// Fuse hand labels with robot experience over a map.
    Label(LabelArgs),
    /// Tile labelled maps into cubes and deal them into folds.
    Dataset(DatasetArgs),
    /// Train models on every fold but one.
    Train(TrainArgs),
    /// Predict traversability probabilities for a map.
    Infer(InferArgs),
    /// Score predictions against labels.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub rays: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write active voxels with occupancy probability as PLY.
    #[arg(long)]
    pub ply: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Hand-label CSV used as the prior.
    #[arg(long)]
    pub hand: Option<PathBuf>,
    /// Pose or collision logs; repeatable.
    #[arg(long = "events")]
    pub events: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// `id=MAP,LABELS`; repeatable.
    #[arg(long = "scene", required = true)]
    pub scenes: Vec<String>,
    /// Scene evaluated whole and kept out of the folds.
    #[arg(long)]
    pub test: String,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `dataset`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Fold held out for validation.
    #[arg(long, default_value_t = 0)]
    pub fold: usize,
    /// Ensemble size (default from the configuration).
    #[arg(long)]
    pub members: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Output directory for `model_<n>.ftnn` and `train_log_<n>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Model files or directories of them; repeatable.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub map: PathBuf,
    /// TE map CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub ply: Option<PathBuf>,
    /// Box centre `x,y,z` (default: middle of the active voxels at their median height).
    #[arg(long, value_parser = parse_triple)]
    pub center: Option<[f64; 3]>,
    /// Box size `x,y,z` in metres (default from the configuration).
    #[arg(long, value_parser = parse_triple)]
    pub extent: Option<[f64; 3]>,
    /// Predict every active voxel instead of a local box.
    #[arg(long, conflicts_with_all = ["center", "extent"])]
    pub full: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Global,
    Density,
    Temporal,
    Compress2d,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub mode: EvalMode,
    /// Label CSV of the evaluated scene.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// TE maps; one per fold in global mode.
    #[arg(long = "te")]
    pub te: Vec<PathBuf>,
    /// Voxel map, for density columns, 2D compression and the geometric baseline.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Also score the geometric baseline on `--map` (global mode).
    #[arg(long)]
    pub ctc: bool,
    /// Ray log replayed in temporal mode.
    #[arg(long)]
    pub rays: Option<PathBuf>,
    /// Models classifying each temporal snapshot.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    #[arg(long, default_value_t = voxtrav_core::eval::DEFAULT_SNAPSHOT_INTERVAL)]
    pub interval: f64,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// CSV report; compress2d also writes a PGM beside it.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected three values, got {}", v.len()))
}
