use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hopscatter::evalx::TrackMode;

#[derive(Parser, Debug)]
#[command(
    name = "hopscatter",
    version,
    about = "Frequency-hopping RFID backscatter: simulate, de-hop, track, evaluate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a windowed dataset of hopped reads.
    Gen(GenArgs),
    /// Train the recovery network on a dataset.
    Train(TrainArgs),
    /// Track every trajectory of a dataset and write the paths as CSV.
    Track(TrackArgs),
    /// Compare the recovered pipeline with oracle, eavesdropper and baselines.
    Eval(EvalArgs),
    /// Train and evaluate the ablation grid on both scenario presets.
    Ablate(AblateArgs),
    /// Finite-difference check of every layer and an assembled model.
    Gradcheck(GradcheckArgs),
    /// Re-render report files from a results directory.
    Report(ReportArgs),
    /// End-to-end gen → train → track → eval at desk scale.
    Smoke(SmokeArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Scenario preset: dataset1, dataset2, noisy, ideal, or a preset JSON file.
    #[arg(long, default_value = "dataset1")]
    pub preset: String,
    /// Number of gesture trajectories.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (dataset.jsonl + manifest.json).
    #[arg(long)]
    pub out: PathBuf,
    /// System configuration JSON (array, channel plan, noise, ...).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ticks per window.
    #[arg(long, default_value_t = hopscatter::rfsim::DEFAULT_WINDOW_LEN)]
    pub window_len: usize,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory written by `gen`.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory (model.ckpt, train_report.json, loss_curve.csv).
    #[arg(long)]
    pub out: PathBuf,
    /// Architecture: `default`, an ablation row name, or a JSON file.
    #[arg(long, default_value = "default")]
    pub config: String,
    /// Training hyperparameters JSON.
    #[arg(long, conflicts_with = "desk_scale")]
    pub hparams: Option<PathBuf>,
    /// Batch 32, 30 epochs.
    #[arg(long)]
    pub desk_scale: bool,
    /// Override the epoch cap.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Override the training seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Recovered,
    Analytic,
    Eavesdropper,
}

impl From<ModeArg> for TrackMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Recovered => TrackMode::Recovered,
            ModeArg::Analytic => TrackMode::Analytic,
            ModeArg::Eavesdropper => TrackMode::Eavesdropper,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrackArgs {
    /// Recovery model checkpoint (required for `--mode recovered`).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    pub input: PathBuf,
    /// A `.csv` file, or a directory for trajectories.csv and track_summary.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Which phases feed the tracker.
    #[arg(long, value_enum, default_value_t = ModeArg::Recovered)]
    pub mode: ModeArg,
    /// Also dump each trajectory's initial confidence map (directory output only).
    #[arg(long)]
    pub confidence: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Recovery model checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    /// Test dataset directory.
    #[arg(long)]
    pub input: PathBuf,
    /// Training dataset for the direct-regression baselines; omitted → no baselines.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Results directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// Results directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// System configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training windows per scenario.
    #[arg(long, default_value_t = 2000)]
    pub windows: usize,
    /// Test trajectories per scenario.
    #[arg(long, default_value_t = 20)]
    pub test_trajectories: usize,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    /// Comma-separated subset of row names (default: all nine).
    #[arg(long)]
    pub models: Option<String>,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Architecture: `default`, an ablation row name, or a JSON file.
    #[arg(long, default_value = "default")]
    pub config: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Coordinates probed per model tensor (default: all).
    #[arg(long)]
    pub per_param: Option<usize>,
    /// Directory for gradcheck.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Results directory holding results_raw.json.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SmokeArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Directory for summary.json (printed to stdout either way).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shrink every stage for a quick check.
    #[arg(long)]
    pub tiny: bool,
}
