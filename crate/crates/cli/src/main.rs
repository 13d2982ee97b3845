//! `spkaug`: expand corpus manifests with pseudo speakers, render the
//! perturbed audio, and measure deviation curves.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spkaug_core::{Aggregation, ManifestFormat, Method};

#[derive(Debug, Parser)]
#[command(name = "spkaug", version, about = "Speaker augmentation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand a manifest with pseudo speakers and write expanded.csv
    Expand(ExpandArgs),
    /// Render every perturbed entry of an expanded manifest
    Augment(AugmentArgs),
    /// Compute deviation distributions and the deviation-perturbation curve
    Curves(CurvesArgs),
    /// Add noise at a fixed SNR to every utterance of a manifest
    Mix(MixArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
    Kaldi,
}

impl From<FormatArg> for ManifestFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ManifestFormat::Csv,
            FormatArg::Jsonl => ManifestFormat::Jsonl,
            FormatArg::Kaldi => ManifestFormat::KaldiPair,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Sp,
    Vtlp,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sp => Method::Sp,
            MethodArg::Vtlp => Method::Vtlp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggArg {
    Mean,
    Sum,
}

impl From<AggArg> for Aggregation {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Mean => Aggregation::Mean,
            AggArg::Sum => Aggregation::Sum,
        }
    }
}

#[derive(Debug, Args)]
struct ManifestArgs {
    /// Input manifest (for kaldi: a directory or its wav.scp)
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Manifest format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct RangeArgs {
    /// Reject alphas outside [0.8, 1.2] (default)
    #[arg(long, overrides_with = "no_strict_range")]
    strict_range: bool,
    /// Allow alphas outside [0.8, 1.2]
    #[arg(long)]
    no_strict_range: bool,
}

impl RangeArgs {
    fn strict(&self) -> bool {
        !self.no_strict_range
    }
}

#[derive(Debug, Args)]
struct WarpArgs {
    /// VTLP warp boundary frequency in Hz
    #[arg(long = "f0", value_name = "HZ", default_value_t = spkaug_core::vtlp::DEFAULT_F0_HZ)]
    f0_hz: f64,
    /// VTLP upper frequency in Hz (half the sample rate)
    #[arg(long = "fmax", value_name = "HZ", default_value_t = spkaug_core::vtlp::DEFAULT_FMAX_HZ)]
    fmax_hz: f64,
}

#[derive(Debug, Args)]
struct ExpandArgs {
    #[command(flatten)]
    input: ManifestArgs,
    /// Perturbation method; repeat together with --alphas to fuse plans
    #[arg(long, value_enum, required = true)]
    method: Vec<MethodArg>,
    /// Comma-separated perturbation factors, one list per --method
    #[arg(long, value_name = "A,B,...", required = true)]
    alphas: Vec<String>,
    /// Leave the original speakers out of the expanded manifest
    #[arg(long)]
    no_keep_original: bool,
    #[command(flatten)]
    range: RangeArgs,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Expanded manifest written by `expand`
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Original manifest, needed when the expanded one omits originals
    #[arg(long, value_name = "PATH")]
    sources: Option<PathBuf>,
    /// Format of --sources
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[command(flatten)]
    warp: WarpArgs,
    #[command(flatten)]
    range: RangeArgs,
    /// Concurrent utterance tasks [default: available processors]
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Exit 0 even if some entries fail
    #[arg(long)]
    allow_partial: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    #[command(flatten)]
    input: ManifestArgs,
    /// Perturbation method
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Alphas for the per-alpha distribution curves
    #[arg(long, value_name = "A,B,...", default_value = "0.8,0.9,1.1,1.2")]
    alphas: String,
    /// Alpha grid for the deviation-perturbation curve
    #[arg(long, value_name = "LO:HI:STEP", default_value = "0.8:1.2:0.05")]
    grid: String,
    /// Histogram bin width
    #[arg(long, value_name = "W", default_value_t = spkaug_core::deviation::DEFAULT_BIN_WIDTH)]
    bin_width: f64,
    /// Speaker-level aggregation for the distributions
    #[arg(long, value_enum, default_value_t = AggArg::Mean)]
    agg: AggArg,
    /// Precomputed embeddings instead of the built-in baseline
    #[arg(long, value_name = "PATH")]
    embeddings: Option<PathBuf>,
    #[command(flatten)]
    warp: WarpArgs,
    /// Concurrent utterance tasks [default: available processors]
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MixArgs {
    #[command(flatten)]
    input: ManifestArgs,
    /// Noise recording, looped or cropped to each utterance
    #[arg(long, value_name = "PATH")]
    noise: PathBuf,
    /// Signal-to-noise ratio in dB
    #[arg(long, value_name = "DB")]
    snr: f64,
    /// Run seed for noise offsets
    #[arg(long, value_name = "S", default_value_t = 0)]
    seed: u64,
    /// Concurrent utterance tasks [default: available processors]
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Expand(a) => commands::expand(a),
        Command::Augment(a) => commands::augment(a),
        Command::Curves(a) => commands::curves(a),
        Command::Mix(a) => commands::mix(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
