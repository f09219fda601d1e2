use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use mspca::{AggregationRule, Basis, MincorrMode, Mode};

fn parse_with<T>(s: &str) -> Result<T, String>
where
    T: FromStr,
    T::Err: Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "mspca",
    version,
    about = "Streaming multiscale PCA anomaly detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one series and write per-sample scores as CSV.
    Score(CommonArgs),
    /// Evaluate every series in a directory and write an AUC report.
    Eval(CommonArgs),
    /// Count operations and time multiscale vs hierarchical over a window sweep.
    Bench(BenchArgs),
    /// Generate a synthetic series from a spec file.
    Synth(SynthArgs),
}

/// Options shared by `score`, `eval` and `bench`. Every option overrides the
/// corresponding key of the `--config` file.
#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML or JSON file with default values for any of the options below.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// fixed | multiscale | hierarchical
    #[arg(long, value_parser = parse_with::<Mode>)]
    pub mode: Option<Mode>,
    /// identity | haar
    #[arg(long, value_parser = parse_with::<Basis>)]
    pub basis: Option<Basis>,
    /// Number of dyadic scales J (windows 2..=2^J).
    #[arg(long)]
    pub scales: Option<usize>,
    /// Window size in fixed mode.
    #[arg(long)]
    pub fixed_p: Option<usize>,
    /// Principal directions tracked per scale (1 or 2).
    #[arg(long)]
    pub components: Option<usize>,
    /// norm | pca2 | mincorr
    #[arg(long = "agg", value_parser = parse_with::<AggregationRule>)]
    pub aggregation: Option<AggregationRule>,
    /// streaming | offline
    #[arg(long, value_parser = parse_with::<MincorrMode>)]
    pub mincorr_mode: Option<MincorrMode>,
    /// PAST energy initialization, 0 < epsilon < 1.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Hierarchical mode: rotate upper-level projection pairs into the Haar basis.
    #[arg(long)]
    pub haar_upper_levels: bool,

    /// Series file (score) or benchmark directory (eval).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Synthetic spec to score instead of an input file.
    #[arg(long)]
    pub synth: Option<PathBuf>,
    /// NAB combined-labels JSON; switches eval to NAB-format series.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Scores CSV (score); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report JSON (eval, bench); stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Evaluate every (mode, basis, aggregation, components) combination.
    #[arg(long)]
    pub grid: bool,
    /// Print detector operation counts to stderr.
    #[arg(long)]
    pub instrument: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Widen each anomaly label by this many samples on both sides.
    #[arg(long)]
    pub dilation: Option<usize>,
    /// Benchmark name in the report; defaults to the input directory name.
    #[arg(long)]
    pub benchmark: Option<String>,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Stream length T.
    #[arg(long, default_value_t = 4096)]
    pub length: usize,
    /// Smallest J in the sweep (P = 2^J).
    #[arg(long, default_value_t = 3)]
    pub min_scales: usize,
    /// Largest J in the sweep.
    #[arg(long, default_value_t = 10)]
    pub max_scales: usize,
}

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    /// Spec file, JSON or key=value lines.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output Yahoo-format CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}
