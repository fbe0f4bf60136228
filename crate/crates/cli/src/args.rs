use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "nbrecon", version, about = "Nonbinary LDPC reconciliation toolkit")]
pub struct Cli {
    /// Increase log verbosity (repeatable). Logs go to stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a parity-check matrix and write it as an NBALIST file.
    Construct(ConstructArgs),
    /// Run one frame of the syndrome protocol end to end.
    Reconcile(ReconcileArgs),
    /// Frame-error-rate sweep over a list of QBER values.
    Simulate(SimulateArgs),
    /// Estimate an ensemble threshold with Monte-Carlo density evolution.
    Threshold(ThresholdArgs),
    /// Search for a variable-side degree distribution by differential evolution.
    Optimize(OptimizeArgs),
    /// Channel metrics: conditional entropy, minimum leak, efficiency, beta.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Master seed. Generated and printed to stderr when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (stdout when absent, except where noted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Field order.
    #[arg(long)]
    pub q: Option<usize>,
    /// Design rate. Selects the built-in ensemble unless --lambda is given.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Built-in ensemble key such as r050.
    #[arg(long)]
    pub ensemble: Option<String>,
    /// Variable-side edge distribution, e.g. "2:0.3 3:0.7".
    #[arg(long)]
    pub lambda: Option<String>,
}

#[derive(Debug, Args)]
pub struct DecoderArgs {
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub llr_saturation: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Code length in symbols.
    #[arg(long)]
    pub n: Option<usize>,
    /// Format of the summary printed to stdout.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct ReconcileArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// NBALIST code file.
    #[arg(long)]
    pub code: Option<PathBuf>,
    /// Alice's frame: whitespace-separated symbols. Drawn from the seed when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Channel QBER.
    #[arg(long)]
    pub qber: Option<f64>,
    #[command(flatten)]
    pub decoder: DecoderArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// NBALIST code file. Otherwise a code is built from the ensemble options.
    #[arg(long)]
    pub code: Option<PathBuf>,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated QBER values.
    #[arg(long, value_delimiter = ',')]
    pub qber: Option<Vec<f64>>,
    /// Frames per point.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Stop a point after this many frame errors.
    #[arg(long)]
    pub error_stop: Option<usize>,
    /// Search for the largest QBER with FER at most this value. The QBER
    /// list must then hold the two ends of the search range.
    #[arg(long)]
    pub target_fer: Option<f64>,
    /// Bisection steps for --target-fer.
    #[arg(long)]
    pub search_steps: Option<usize>,
    /// Add a wall-time column (output is then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(flatten)]
    pub decoder: DecoderArgs,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Message pool size.
    #[arg(long)]
    pub node_count: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Mean message entropy counted as success.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Comma-separated QBER grid. Defaults to 20 points below the best possible threshold.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Bisect between the grid ends with this many steps instead of sweeping.
    #[arg(long)]
    pub bisect: Option<usize>,
    /// Accept failing grid points without a confirmation run.
    #[arg(long)]
    pub no_confirm: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub node_count: Option<usize>,
    #[arg(long)]
    pub max_distinct: Option<usize>,
    #[arg(long)]
    pub d_v_max: Option<usize>,
    /// Audit log path. Defaults to the output path with `.audit.json` appended.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Channel QBER.
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 8)]
    pub q: usize,
    /// Syndrome length.
    #[arg(long, requires = "n")]
    pub m: Option<usize>,
    /// Frame length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Code rate, in place of --m/--n.
    #[arg(long, conflicts_with = "m")]
    pub rate: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}
